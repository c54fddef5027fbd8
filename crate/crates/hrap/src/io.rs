//! CSV readers and writers for datasets, observations and result tables.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use hrap_core::adaptive::RecordedObservations;
use hrap_core::cost::{ParamRange, TuningResult};
use hrap_core::domain::DEFAULT_COMPLEXITY_MAX;
use hrap_core::{Assignment, Employee, EmployeeId, ProblemInstance, SkillId, Task, TaskId};
use serde::Deserialize;

use crate::bench::{BenchRow, BenchSummary};

pub const EMPLOYEES_HEADER: &[&str] = &["employee_id", "skill", "efficiency", "performance_rating"];
pub const TASKS_HEADER: &[&str] = &["task_id", "required_skill", "duration_hours", "complexity"];
pub const OBSERVATIONS_HEADER: &[&str] = &["iteration", "employee_id", "task_id", "actual_time_hours"];
pub const EFFICIENCY_HEADER: &[&str] = &["employee_id", "skill", "efficiency"];
pub const ASSIGNMENT_HEADER: &[&str] = &["task_id", "employee_id"];
pub const TUNING_HEADER: &[&str] = &[
    "rank", "lambda", "alpha", "beta", "gamma", "objective", "dev_above", "dev_below", "total_cost",
];
pub const SENSITIVITY_HEADER: &[&str] = &["parameter", "min", "max", "range", "sensitivity"];
pub const BENCH_HEADER: &[&str] = &[
    "n_employees",
    "n_tasks",
    "seed",
    "variable_count",
    "wall_time_s",
    "gap_percent",
    "objective",
    "status",
];
pub const BENCH_SUMMARY_HEADER: &[&str] = &[
    "n_employees",
    "n_tasks",
    "runs",
    "median_wall_time_s",
    "median_gap_percent",
    "max_gap_percent",
];

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Open {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path}, line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}, line {line}: {source}")]
    Invalid {
        path: PathBuf,
        line: u64,
        source: hrap_core::Error,
    },
    #[error("{path}: {source}")]
    Dataset {
        path: PathBuf,
        source: hrap_core::Error,
    },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: csv::Error },
}

pub type IoResult<T> = std::result::Result<T, IoError>;

fn open(path: &Path) -> IoResult<File> {
    File::open(path).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads `rdr` as CSV with an exact header, yielding each row with its line number.
fn rows<T, R>(path: &Path, rdr: R, header: &[&str]) -> IoResult<Vec<(u64, T)>>
where
    T: for<'de> Deserialize<'de>,
    R: Read,
{
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(rdr);
    let found = rdr
        .headers()
        .map_err(|e| IoError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(IoError::Header {
            path: path.to_path_buf(),
            expected: header.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| IoError::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .deserialize::<T>(Some(&found))
            .map_err(|e| IoError::Parse {
                path: path.to_path_buf(),
                line,
                message: match e.kind() {
                    csv::ErrorKind::Deserialize { err, .. } => match err.field() {
                        Some(f) => format!("column {}: {}", header[f as usize], err.kind()),
                        None => err.kind().to_string(),
                    },
                    _ => e.to_string(),
                },
            })?;
        out.push((line, row));
    }
    Ok(out)
}

fn invalid(path: &Path, line: u64) -> impl Fn(hrap_core::Error) -> IoError + '_ {
    move |source| IoError::Invalid {
        path: path.to_path_buf(),
        line,
        source,
    }
}

#[derive(Deserialize)]
struct EmployeeRow {
    employee_id: String,
    skill: String,
    efficiency: f64,
    performance_rating: i64,
}

#[derive(Deserialize)]
struct TaskRow {
    task_id: String,
    required_skill: String,
    duration_hours: f64,
    complexity: i64,
}

#[derive(Deserialize)]
struct ObservationRow {
    iteration: usize,
    employee_id: String,
    task_id: String,
    actual_time_hours: f64,
}

#[derive(Deserialize)]
struct EfficiencyRow {
    employee_id: String,
    skill: String,
    efficiency: f64,
}

#[derive(Deserialize)]
struct AssignmentRow {
    task_id: String,
    employee_id: String,
}

pub fn load_employees(path: &Path) -> IoResult<Vec<Employee>> {
    read_employees(path, open(path)?)
}

/// Groups rows by employee in first-appearance order. `path` only labels errors.
pub fn read_employees(path: &Path, rdr: impl Read) -> IoResult<Vec<Employee>> {
    struct Pending {
        id: EmployeeId,
        performance: i64,
        skills: Vec<(SkillId, f64)>,
        first_line: u64,
    }
    let mut pending: Vec<Pending> = Vec::new();
    let mut index: BTreeMap<EmployeeId, usize> = BTreeMap::new();
    for (line, row) in rows::<EmployeeRow, _>(path, rdr, EMPLOYEES_HEADER)? {
        let err = invalid(path, line);
        let id = EmployeeId::new(row.employee_id).map_err(&err)?;
        let skill = SkillId::new(row.skill).map_err(&err)?;
        if !(hrap_core::domain::INGEST_EFFICIENCY_MIN..=hrap_core::domain::INGEST_EFFICIENCY_MAX)
            .contains(&row.efficiency)
        {
            return Err(err(hrap_core::Error::EfficiencyOutOfRange {
                employee: id,
                skill,
                value: row.efficiency,
                range: "[0.1, 1]",
            }));
        }
        if !(1..=5).contains(&row.performance_rating) {
            return Err(err(hrap_core::Error::PerformanceOutOfRange {
                employee: id,
                value: row.performance_rating,
            }));
        }
        let slot = match index.get(&id) {
            Some(&k) => &mut pending[k],
            None => {
                index.insert(id.clone(), pending.len());
                pending.push(Pending {
                    id: id.clone(),
                    performance: row.performance_rating,
                    skills: Vec::new(),
                    first_line: line,
                });
                pending.last_mut().expect("just pushed")
            }
        };
        if slot.performance != row.performance_rating {
            return Err(err(hrap_core::Error::ConflictingPerformance {
                employee: id,
                first: slot.performance,
                second: row.performance_rating,
            }));
        }
        if slot.skills.iter().any(|(s, _)| *s == skill) {
            return Err(err(hrap_core::Error::DuplicateSkill { employee: id, skill }));
        }
        slot.skills.push((skill, row.efficiency));
    }
    pending
        .into_iter()
        .map(|p| {
            let line = p.first_line;
            let e = Employee::new(p.id, p.performance, p.skills).map_err(invalid(path, line))?;
            e.check_ingest_range().map_err(invalid(path, line))?;
            Ok(e)
        })
        .collect()
}

pub fn load_tasks(path: &Path, complexity_max: u32) -> IoResult<Vec<Task>> {
    read_tasks(path, open(path)?, complexity_max)
}

pub fn read_tasks(path: &Path, rdr: impl Read, complexity_max: u32) -> IoResult<Vec<Task>> {
    let mut seen = BTreeMap::new();
    let mut tasks = Vec::new();
    for (line, row) in rows::<TaskRow, _>(path, rdr, TASKS_HEADER)? {
        let err = invalid(path, line);
        let id = TaskId::new(row.task_id).map_err(&err)?;
        if seen.insert(id.clone(), line).is_some() {
            return Err(err(hrap_core::Error::DuplicateTask(id)));
        }
        let skill = SkillId::new(row.required_skill).map_err(&err)?;
        tasks.push(
            Task::new(id, skill, row.duration_hours, row.complexity, complexity_max).map_err(&err)?,
        );
    }
    Ok(tasks)
}

/// Loads both files and validates the instance as a whole.
pub fn load_instance(employees: &Path, tasks: &Path) -> IoResult<ProblemInstance> {
    let emps = load_employees(employees)?;
    let tasks = load_tasks(tasks, DEFAULT_COMPLEXITY_MAX)?;
    ProblemInstance::new(emps, tasks).map_err(|source| IoError::Dataset {
        path: employees.to_path_buf(),
        source,
    })
}

pub fn load_observations(path: &Path) -> IoResult<RecordedObservations> {
    let mut obs = RecordedObservations::new();
    for (line, row) in rows::<ObservationRow, _>(path, open(path)?, OBSERVATIONS_HEADER)? {
        let err = invalid(path, line);
        let employee = EmployeeId::new(row.employee_id).map_err(&err)?;
        let task = TaskId::new(row.task_id).map_err(&err)?;
        if !(row.actual_time_hours > 0.0 && row.actual_time_hours.is_finite()) {
            return Err(err(hrap_core::Error::InvalidObservation {
                employee,
                task,
                value: row.actual_time_hours,
            }));
        }
        if row.iteration == 0 {
            return Err(IoError::Parse {
                path: path.to_path_buf(),
                line,
                message: "iterations are numbered from 1".into(),
            });
        }
        obs.insert(row.iteration, employee, task, row.actual_time_hours);
    }
    Ok(obs)
}

pub fn load_efficiency_table(path: &Path) -> IoResult<BTreeMap<(EmployeeId, SkillId), f64>> {
    let mut table = BTreeMap::new();
    for (line, row) in rows::<EfficiencyRow, _>(path, open(path)?, EFFICIENCY_HEADER)? {
        let err = invalid(path, line);
        let employee = EmployeeId::new(row.employee_id).map_err(&err)?;
        let skill = SkillId::new(row.skill).map_err(&err)?;
        if !(row.efficiency > 0.0 && row.efficiency <= 1.0) {
            return Err(err(hrap_core::Error::EfficiencyOutOfRange {
                employee,
                skill,
                value: row.efficiency,
                range: "(0, 1]",
            }));
        }
        if table.insert((employee.clone(), skill.clone()), row.efficiency).is_some() {
            return Err(err(hrap_core::Error::DuplicateSkill { employee, skill }));
        }
    }
    Ok(table)
}

/// Reads `task_id,employee_id` rows; an empty employee marks the task unassigned.
pub fn load_assignment(path: &Path) -> IoResult<Assignment> {
    let mut a = Assignment::default();
    for (line, row) in rows::<AssignmentRow, _>(path, open(path)?, ASSIGNMENT_HEADER)? {
        let err = invalid(path, line);
        let task = TaskId::new(row.task_id).map_err(&err)?;
        if a.pairs.contains_key(&task) || a.unassigned.contains(&task) {
            return Err(err(hrap_core::Error::MultipleAssignment(task)));
        }
        if row.employee_id.is_empty() {
            a.unassigned.push(task);
        } else {
            a.pairs.insert(task, EmployeeId::new(row.employee_id).map_err(&err)?);
        }
    }
    Ok(a)
}

/// A CSV writer over a freshly created file.
pub struct Table {
    path: PathBuf,
    wtr: csv::Writer<Box<dyn Write>>,
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> IoResult<Self> {
        let file = File::create(path).map_err(|source| IoError::Open {
            path: path.to_path_buf(),
            source,
        })?;
        Self::new(path, Box::new(std::io::BufWriter::new(file)), header)
    }

    pub fn new(path: &Path, out: Box<dyn Write>, header: &[&str]) -> IoResult<Self> {
        let mut t = Self {
            path: path.to_path_buf(),
            wtr: csv::Writer::from_writer(out),
        };
        t.row(header.iter().map(|s| s.to_string()))?;
        Ok(t)
    }

    pub fn row(&mut self, fields: impl IntoIterator<Item = String>) -> IoResult<()> {
        let fields: Vec<String> = fields.into_iter().collect();
        self.wtr.write_record(&fields).map_err(|source| IoError::Write {
            path: self.path.clone(),
            source,
        })
    }

    pub fn finish(mut self) -> IoResult<()> {
        self.wtr.flush().map_err(|source| IoError::Write {
            path: self.path.clone(),
            source: source.into(),
        })
    }
}

pub fn write_employees(path: &Path, employees: &[Employee]) -> IoResult<()> {
    let mut t = Table::create(path, EMPLOYEES_HEADER)?;
    for e in employees {
        for (skill, eff) in e.efficiencies() {
            t.row([
                e.id().to_string(),
                skill.to_string(),
                eff.to_string(),
                e.performance().to_string(),
            ])?;
        }
    }
    t.finish()
}

pub fn write_tasks(path: &Path, tasks: &[Task]) -> IoResult<()> {
    let mut t = Table::create(path, TASKS_HEADER)?;
    for task in tasks {
        t.row([
            task.id().to_string(),
            task.required_skill().to_string(),
            task.duration().to_string(),
            task.complexity().to_string(),
        ])?;
    }
    t.finish()
}

pub fn write_efficiency_table(path: &Path, rows: &[(EmployeeId, SkillId, f64)]) -> IoResult<()> {
    let mut t = Table::create(path, EFFICIENCY_HEADER)?;
    for (e, s, v) in rows {
        t.row([e.to_string(), s.to_string(), v.to_string()])?;
    }
    t.finish()
}

/// Assigned tasks in id order, then unassigned tasks with an empty employee.
pub fn write_assignment(path: &Path, a: &Assignment) -> IoResult<()> {
    let mut t = Table::create(path, ASSIGNMENT_HEADER)?;
    for (task, emp) in &a.pairs {
        t.row([task.to_string(), emp.to_string()])?;
    }
    for task in &a.unassigned {
        t.row([task.to_string(), String::new()])?;
    }
    t.finish()
}

pub fn write_tuning(path: &Path, result: &TuningResult) -> IoResult<()> {
    let mut t = Table::create(path, TUNING_HEADER)?;
    for (k, e) in result.entries.iter().enumerate() {
        let hp = e.hyperparams;
        t.row([
            (k + 1).to_string(),
            hp.lambda.to_string(),
            hp.alpha.to_string(),
            hp.beta.to_string(),
            hp.gamma.to_string(),
            e.objective.to_string(),
            e.dev_above.to_string(),
            e.dev_below.to_string(),
            e.total_cost.to_string(),
        ])?;
    }
    t.finish()
}

pub fn write_sensitivity(path: &Path, ranges: &[ParamRange]) -> IoResult<()> {
    let mut t = Table::create(path, SENSITIVITY_HEADER)?;
    for r in ranges {
        t.row([
            r.name.to_string(),
            r.min.to_string(),
            r.max.to_string(),
            r.range.to_string(),
            r.sensitivity.as_str().to_string(),
        ])?;
    }
    t.finish()
}

pub fn write_bench(path: &Path, rows: &[BenchRow]) -> IoResult<()> {
    let mut t = Table::create(path, BENCH_HEADER)?;
    for r in rows {
        t.row(bench_fields(r))?;
    }
    t.finish()
}

pub fn bench_fields(r: &BenchRow) -> [String; 8] {
    [
        r.n_employees.to_string(),
        r.n_tasks.to_string(),
        r.seed.to_string(),
        r.variable_count.to_string(),
        format!("{:.6}", r.wall_time_s),
        r.gap_percent.map_or_else(String::new, |g| format!("{g:.6}")),
        r.objective.map_or_else(String::new, |o| o.to_string()),
        r.status.clone(),
    ]
}

pub fn write_bench_summary(path: &Path, summary: &[BenchSummary]) -> IoResult<()> {
    let mut t = Table::create(path, BENCH_SUMMARY_HEADER)?;
    for s in summary {
        t.row([
            s.n_employees.to_string(),
            s.n_tasks.to_string(),
            s.runs.to_string(),
            format!("{:.6}", s.median_wall_time_s),
            s.median_gap_percent.map_or_else(String::new, |g| format!("{g:.6}")),
            s.max_gap_percent.map_or_else(String::new, |g| format!("{g:.6}")),
        ])?;
    }
    t.finish()
}
