//! JSON reports and the plain-text summaries printed alongside them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use hrap_core::adaptive::{AdaptiveTrace, IterationRecord};
use hrap_core::cost::{ParamRange, TuningResult};
use hrap_core::metrics::MetricsBlock;
use hrap_core::{
    partition_assignable, target_workload, variable_count, Assignment, Hyperparams, MilpResult,
    ProblemInstance,
};
use serde::Serialize;
use serde_json::Value;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Name under which wall-clock fields appear; they are the only
/// nondeterministic values in a report.
pub const WALL_TIME_KEY: &str = "wall_time_s";

#[derive(Debug, Clone, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for Tool {
    fn default() -> Self {
        Self {
            name: TOOL_NAME,
            version: TOOL_VERSION,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceSummary {
    pub employees: usize,
    pub tasks: usize,
    pub assignable_tasks: usize,
    pub unassigned_tasks: usize,
    pub skills: usize,
    pub total_hours: f64,
    pub target_workload: f64,
    pub variable_count: usize,
}

impl InstanceSummary {
    pub fn of(inst: &ProblemInstance) -> Self {
        let p = partition_assignable(inst);
        let skills: std::collections::BTreeSet<_> = inst
            .employees()
            .iter()
            .flat_map(|e| e.skills())
            .chain(inst.tasks().iter().map(|t| t.required_skill()))
            .collect();
        Self {
            employees: inst.employees().len(),
            tasks: inst.tasks().len(),
            assignable_tasks: p.assignable.len(),
            unassigned_tasks: p.unassigned.len(),
            skills: skills.len(),
            total_hours: p.assignable_tasks(inst).map(|t| t.duration()).sum(),
            target_workload: target_workload(inst).unwrap_or(0.0),
            variable_count: variable_count(inst),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub variance: f64,
    pub gini: f64,
    pub jain: f64,
    pub max_above: f64,
    pub max_below: f64,
    pub objective: f64,
    /// Present only for an all-zero workload, where Gini and Jain take their
    /// conventional values.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

impl From<&MetricsBlock> for Metrics {
    fn from(m: &MetricsBlock) -> Self {
        Self {
            variance: m.variance,
            gini: m.gini,
            jain: m.jain,
            max_above: m.max_above,
            max_below: m.max_below,
            objective: m.objective,
            degenerate: m.degenerate,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverStats {
    pub status: &'static str,
    pub objective: Option<f64>,
    pub best_bound: f64,
    pub root_bound: f64,
    pub gap_percent: f64,
    pub gap_absolute: bool,
    pub dev_above: Option<f64>,
    pub dev_below: Option<f64>,
    pub nodes: u64,
    pub lp_iterations: u64,
}

impl SolverStats {
    pub fn of(r: &MilpResult, dev: Option<(f64, f64)>) -> Self {
        let solved = !r.solution.is_empty();
        Self {
            status: r.status.as_str(),
            objective: solved.then_some(r.objective),
            best_bound: r.best_bound,
            root_bound: r.root_bound,
            gap_percent: r.gap.percent,
            gap_absolute: r.gap.absolute,
            dev_above: dev.map(|d| d.0),
            dev_below: dev.map(|d| d.1),
            nodes: r.nodes,
            lp_iterations: r.lp_iterations,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HyperparamsEcho {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl From<&Hyperparams> for HyperparamsEcho {
    fn from(h: &Hyperparams) -> Self {
        Self {
            lambda: h.lambda,
            alpha: h.alpha,
            beta: h.beta,
            gamma: h.gamma,
        }
    }
}

/// Output of `allocate`: everything needed to audit and rerun one solve.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: Tool,
    /// Resolved options; rerunning with these and the same input files
    /// reproduces the assignment.
    pub config: Value,
    pub instance: InstanceSummary,
    pub assignment: BTreeMap<String, String>,
    pub unassigned: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_cost: Option<f64>,
    /// Keys: `milp`, `greedy_proxy` (stand-in for a manual allocation), `random`.
    pub metrics: BTreeMap<&'static str, Metrics>,
    pub solver: SolverStats,
    pub wall_time_s: f64,
}

pub fn assignment_map(a: &Assignment) -> BTreeMap<String, String> {
    a.pairs
        .iter()
        .map(|(t, e)| (t.to_string(), e.to_string()))
        .collect()
}

pub fn id_list<T: ToString>(ids: &[T]) -> Vec<String> {
    ids.iter().map(ToString::to_string).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservationEcho {
    pub employee_id: String,
    pub task_id: String,
    pub skill: String,
    pub nominal_hours: f64,
    pub actual_hours: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationEcho {
    pub iteration: usize,
    pub employees: Vec<String>,
    pub assignment: BTreeMap<String, String>,
    pub observations: Vec<ObservationEcho>,
    pub efficiencies: BTreeMap<String, BTreeMap<String, f64>>,
    pub survivors: Vec<String>,
    pub removed: Vec<String>,
    pub guard_triggered: bool,
    pub status: &'static str,
    pub objective: f64,
    pub best_bound: f64,
    pub gap_percent: f64,
    pub nodes: u64,
    pub wall_time_s: f64,
}

impl From<&IterationRecord> for IterationEcho {
    fn from(r: &IterationRecord) -> Self {
        Self {
            iteration: r.iteration,
            employees: id_list(&r.employees),
            assignment: assignment_map(&r.assignment),
            observations: r
                .observations
                .iter()
                .map(|o| ObservationEcho {
                    employee_id: o.employee.to_string(),
                    task_id: o.task.to_string(),
                    skill: o.skill.to_string(),
                    nominal_hours: o.nominal,
                    actual_hours: o.actual,
                    efficiency: o.efficiency,
                })
                .collect(),
            efficiencies: r
                .efficiencies
                .iter()
                .map(|(e, m)| {
                    (
                        e.to_string(),
                        m.iter().map(|(s, v)| (s.to_string(), *v)).collect(),
                    )
                })
                .collect(),
            survivors: id_list(&r.survivors),
            removed: id_list(&r.removed),
            guard_triggered: r.guard_triggered,
            status: r.status.as_str(),
            objective: r.objective,
            best_bound: r.best_bound,
            gap_percent: r.gap_percent,
            nodes: r.nodes,
            wall_time_s: r.wall_time,
        }
    }
}

/// Output of `adapt`.
#[derive(Debug, Clone, Serialize)]
pub struct AdaptReport {
    pub tool: Tool,
    pub config: Value,
    pub instance: InstanceSummary,
    pub min_employees: usize,
    pub stopped_by_guard: bool,
    pub iterations: Vec<IterationEcho>,
    pub final_efficiencies: Vec<(String, String, f64)>,
}

impl AdaptReport {
    pub fn new(config: Value, inst: &ProblemInstance, trace: &AdaptiveTrace) -> Self {
        Self {
            tool: Tool::default(),
            config,
            instance: InstanceSummary::of(inst),
            min_employees: trace.min_employees,
            stopped_by_guard: trace.stopped_by_guard,
            iterations: trace.iterations.iter().map(IterationEcho::from).collect(),
            final_efficiencies: trace
                .final_efficiencies
                .iter()
                .map(|(e, s, v)| (e.to_string(), s.to_string(), *v))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TuningRow {
    pub rank: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub objective: f64,
    pub dev_above: f64,
    pub dev_below: f64,
    pub total_cost: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivityRow {
    pub parameter: &'static str,
    pub min: f64,
    pub max: f64,
    pub range: f64,
    pub sensitivity: &'static str,
}

/// Output of `tune`.
#[derive(Debug, Clone, Serialize)]
pub struct TuneReport {
    pub tool: Tool,
    pub config: Value,
    pub instance: InstanceSummary,
    pub evaluated: usize,
    pub failures: Vec<String>,
    pub ranking: Vec<TuningRow>,
    pub sensitivity: Vec<SensitivityRow>,
    pub wall_time_s: f64,
}

impl TuneReport {
    pub fn new(
        config: Value,
        inst: &ProblemInstance,
        result: &TuningResult,
        ranges: &[ParamRange],
        wall_time_s: f64,
    ) -> Self {
        Self {
            tool: Tool::default(),
            config,
            instance: InstanceSummary::of(inst),
            evaluated: result.evaluated,
            failures: result
                .failures
                .iter()
                .map(|(hp, e)| {
                    format!(
                        "lambda={} alpha={} beta={} gamma={}: {e}",
                        hp.lambda, hp.alpha, hp.beta, hp.gamma
                    )
                })
                .collect(),
            ranking: result
                .entries
                .iter()
                .enumerate()
                .map(|(k, e)| TuningRow {
                    rank: k + 1,
                    lambda: e.hyperparams.lambda,
                    alpha: e.hyperparams.alpha,
                    beta: e.hyperparams.beta,
                    gamma: e.hyperparams.gamma,
                    objective: e.objective,
                    dev_above: e.dev_above,
                    dev_below: e.dev_below,
                    total_cost: e.total_cost,
                })
                .collect(),
            sensitivity: ranges
                .iter()
                .map(|r| SensitivityRow {
                    parameter: r.name,
                    min: r.min,
                    max: r.max,
                    range: r.range,
                    sensitivity: r.sensitivity.as_str(),
                })
                .collect(),
            wall_time_s,
        }
    }
}

/// Output of `metrics`.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub tool: Tool,
    pub config: Value,
    pub instance: InstanceSummary,
    pub workload: BTreeMap<String, f64>,
    pub metrics: Metrics,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Removes every `wall_time_s` key, recursively.
pub fn strip_wall_time(value: &mut Value) {
    match value {
        Value::Object(map) => {
            map.remove(WALL_TIME_KEY);
            map.values_mut().for_each(strip_wall_time);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_wall_time),
        _ => {}
    }
}

/// Heading style for terminal output.
#[derive(Debug, Clone, Copy)]
pub struct Style {
    pub color: bool,
}

impl Style {
    /// Color only on a terminal and only when `NO_COLOR` is unset or empty.
    pub fn detect() -> Self {
        use std::io::IsTerminal;
        let no_color = std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty());
        Self {
            color: !no_color && std::io::stdout().is_terminal(),
        }
    }

    pub fn heading(&self, text: &str) -> String {
        if self.color {
            format!("\x1b[1m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }
}

/// Renders rows as left-aligned columns separated by two spaces.
pub fn aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells
            .zip(&width)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut header.iter().copied());
    for r in rows {
        line(&mut r.iter().map(String::as_str));
    }
    out
}

pub fn metrics_table(metrics: &BTreeMap<&'static str, Metrics>) -> String {
    let rows: Vec<Vec<String>> = metrics
        .iter()
        .map(|(name, m)| {
            vec![
                name.to_string(),
                format!("{:.4}", m.objective),
                format!("{:.4}", m.max_above),
                format!("{:.4}", m.max_below),
                format!("{:.4}", m.variance),
                format!("{:.4}", m.gini),
                format!("{:.4}", m.jain),
            ]
        })
        .collect();
    aligned(
        &["method", "objective", "above", "below", "variance", "gini", "jain"],
        &rows,
    )
}

pub fn summarize_run(report: &RunReport, style: Style) -> String {
    let mut out = String::new();
    let s = &report.solver;
    let _ = writeln!(out, "{}", style.heading("allocation"));
    let _ = writeln!(
        out,
        "  {} employees, {} tasks ({} unassigned), target {:.4} h, {} variables",
        report.instance.employees,
        report.instance.tasks,
        report.instance.unassigned_tasks,
        report.instance.target_workload,
        report.instance.variable_count
    );
    let _ = writeln!(
        out,
        "  status {}, objective {}, bound {:.6}, gap {:.4}%{}, {} nodes, {:.2} s",
        s.status,
        s.objective.map_or("-".to_string(), |o| format!("{o:.6}")),
        s.best_bound,
        s.gap_percent,
        if s.gap_absolute { " (absolute)" } else { "" },
        s.nodes,
        report.wall_time_s
    );
    if let Some(c) = report.total_cost {
        let _ = writeln!(out, "  total cost {c:.6}");
    }
    let _ = writeln!(out, "{}", style.heading("metrics"));
    out.push_str(&metrics_table(&report.metrics));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_nested_wall_times() {
        let mut v = serde_json::json!({
            "a": 1, "wall_time_s": 2.0,
            "iterations": [{"wall_time_s": 1.0, "b": 2}]
        });
        strip_wall_time(&mut v);
        assert_eq!(v, serde_json::json!({"a": 1, "iterations": [{"b": 2}]}));
    }

    #[test]
    fn aligned_columns() {
        let t = aligned(&["a", "bb"], &[vec!["xxx".into(), "y".into()]]);
        assert_eq!(t, "a    bb\nxxx  y\n");
    }
}
