//! Problem data: employees, tasks, instances and assignments.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Complexity ratings above this are rejected unless the caller widens the bound.
pub const DEFAULT_COMPLEXITY_MAX: u32 = 5;

/// Efficiencies read from a dataset must lie in this closed range.
pub const INGEST_EFFICIENCY_MIN: f64 = 0.1;
pub const INGEST_EFFICIENCY_MAX: f64 = 1.0;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(String);

        impl $name {
            pub fn new(raw: impl Into<String>) -> Result<Self> {
                let raw = raw.into();
                if raw.is_empty() || raw.contains(',') || raw.trim() != raw {
                    return Err(Error::InvalidId(raw));
                }
                Ok(Self(raw))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl core::str::FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                Self::new(s)
            }
        }
    };
}

string_id!(
    /// Case-sensitive skill token.
    SkillId
);
string_id!(EmployeeId);
string_id!(TaskId);

/// An employee with per-skill efficiencies and a single performance rating.
///
/// The skill set is exactly the key set of the efficiency map.
#[derive(Debug, Clone, PartialEq)]
pub struct Employee {
    id: EmployeeId,
    efficiency: BTreeMap<SkillId, f64>,
    performance: u8,
}

impl Employee {
    /// Builds an employee, rejecting duplicate skills, efficiencies outside
    /// `(0, 1]` and performance ratings outside `[1, 5]`.
    ///
    /// Dataset loaders additionally call [`Employee::check_ingest_range`].
    pub fn new(
        id: EmployeeId,
        performance: i64,
        skills: impl IntoIterator<Item = (SkillId, f64)>,
    ) -> Result<Self> {
        if !(1..=5).contains(&performance) {
            return Err(Error::PerformanceOutOfRange {
                employee: id,
                value: performance,
            });
        }
        let mut efficiency = BTreeMap::new();
        for (skill, value) in skills {
            check_efficiency(&id, &skill, value)?;
            if efficiency.insert(skill.clone(), value).is_some() {
                return Err(Error::DuplicateSkill { employee: id, skill });
            }
        }
        if efficiency.is_empty() {
            return Err(Error::NoSkills(id));
        }
        Ok(Self {
            id,
            efficiency,
            performance: performance as u8,
        })
    }

    /// Checks every efficiency against the dataset range `[0.1, 1]`.
    pub fn check_ingest_range(&self) -> Result<()> {
        for (skill, &value) in &self.efficiency {
            if !(INGEST_EFFICIENCY_MIN..=INGEST_EFFICIENCY_MAX).contains(&value) {
                return Err(Error::EfficiencyOutOfRange {
                    employee: self.id.clone(),
                    skill: skill.clone(),
                    value,
                    range: "[0.1, 1]",
                });
            }
        }
        Ok(())
    }

    pub fn id(&self) -> &EmployeeId {
        &self.id
    }

    pub fn performance(&self) -> u8 {
        self.performance
    }

    pub fn skills(&self) -> impl Iterator<Item = &SkillId> + '_ {
        self.efficiency.keys()
    }

    pub fn efficiencies(&self) -> &BTreeMap<SkillId, f64> {
        &self.efficiency
    }

    pub fn efficiency(&self, skill: &SkillId) -> Option<f64> {
        self.efficiency.get(skill).copied()
    }

    pub fn has_skill(&self, skill: &SkillId) -> bool {
        self.efficiency.contains_key(skill)
    }

    /// Replaces the efficiency of a held skill. Values must stay in `(0, 1]`.
    pub fn set_efficiency(&mut self, skill: &SkillId, value: f64) -> Result<()> {
        check_efficiency(&self.id, skill, value)?;
        match self.efficiency.get_mut(skill) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(Error::MissingTrueEfficiency {
                employee: self.id.clone(),
                skill: skill.clone(),
            }),
        }
    }

    /// Effective hours for `task`: nominal duration inflated by the inverse
    /// efficiency. `None` when the employee lacks the skill.
    pub fn effective_hours(&self, task: &Task) -> Option<f64> {
        self.efficiency(&task.required_skill)
            .map(|e| task.duration / e)
    }
}

fn check_efficiency(id: &EmployeeId, skill: &SkillId, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(Error::EfficiencyOutOfRange {
            employee: id.clone(),
            skill: skill.clone(),
            value,
            range: "(0, 1]",
        })
    }
}

/// A unit of work requiring exactly one skill.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    id: TaskId,
    required_skill: SkillId,
    duration: f64,
    complexity: u32,
}

impl Task {
    pub fn new(
        id: TaskId,
        required_skill: SkillId,
        duration: f64,
        complexity: i64,
        complexity_max: u32,
    ) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::NonPositiveDuration {
                task: id,
                value: duration,
            });
        }
        if complexity < 1 || complexity > i64::from(complexity_max) {
            return Err(Error::ComplexityOutOfRange {
                task: id,
                value: complexity,
                max: complexity_max,
            });
        }
        Ok(Self {
            id,
            required_skill,
            duration,
            complexity: complexity as u32,
        })
    }

    pub fn id(&self) -> &TaskId {
        &self.id
    }

    pub fn required_skill(&self) -> &SkillId {
        &self.required_skill
    }

    /// Nominal duration in hours.
    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn complexity(&self) -> u32 {
        self.complexity
    }

    pub(crate) fn with_duration(&self, duration: f64) -> Self {
        Self {
            duration,
            ..self.clone()
        }
    }
}

/// Employees and tasks with unique ids and at least one employee.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    employees: Vec<Employee>,
    tasks: Vec<Task>,
    employee_index: BTreeMap<EmployeeId, usize>,
    task_index: BTreeMap<TaskId, usize>,
}

impl ProblemInstance {
    pub fn new(employees: Vec<Employee>, tasks: Vec<Task>) -> Result<Self> {
        if employees.is_empty() {
            return Err(Error::NoEmployees);
        }
        let mut employee_index = BTreeMap::new();
        for (i, e) in employees.iter().enumerate() {
            if employee_index.insert(e.id.clone(), i).is_some() {
                return Err(Error::DuplicateEmployee(e.id.clone()));
            }
        }
        let mut task_index = BTreeMap::new();
        for (i, t) in tasks.iter().enumerate() {
            if task_index.insert(t.id.clone(), i).is_some() {
                return Err(Error::DuplicateTask(t.id.clone()));
            }
        }
        Ok(Self {
            employees,
            tasks,
            employee_index,
            task_index,
        })
    }

    pub fn employees(&self) -> &[Employee] {
        &self.employees
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn employee_index(&self, id: &EmployeeId) -> Option<usize> {
        self.employee_index.get(id).copied()
    }

    pub fn task_index(&self, id: &TaskId) -> Option<usize> {
        self.task_index.get(id).copied()
    }

    /// Distinct skills required by the task set, sorted.
    pub fn required_skills(&self) -> BTreeSet<&SkillId> {
        self.tasks.iter().map(|t| &t.required_skill).collect()
    }

    /// Same instance with every duration multiplied by `factor`.
    pub fn scale_durations(&self, factor: f64) -> Result<Self> {
        let tasks = self
            .tasks
            .iter()
            .map(|t| {
                let scaled = t.duration * factor;
                if scaled.is_finite() && scaled > 0.0 {
                    Ok(t.with_duration(scaled))
                } else {
                    Err(Error::NonPositiveDuration {
                        task: t.id.clone(),
                        value: scaled,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.employees.clone(), tasks)
    }
}

/// Indices of the employees holding the skill `task` requires, in input order.
pub fn qualified_indices(task: &Task, employees: &[Employee]) -> Vec<usize> {
    employees
        .iter()
        .enumerate()
        .filter(|(_, e)| e.has_skill(&task.required_skill))
        .map(|(i, _)| i)
        .collect()
}

/// Ids of the employees qualified for `task`.
pub fn qualified_set(task: &Task, employees: &[Employee]) -> BTreeSet<EmployeeId> {
    employees
        .iter()
        .filter(|e| e.has_skill(&task.required_skill))
        .map(|e| e.id.clone())
        .collect()
}

/// Split of an instance's tasks into those some employee can take and those
/// nobody can.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Indices into `instance.tasks()` of assignable tasks, in input order.
    pub assignable: Vec<usize>,
    /// For each assignable task, the qualified employee indices in input order.
    pub qualified: Vec<Vec<usize>>,
    /// Ids of tasks no employee is qualified for, in input order.
    pub unassigned: Vec<TaskId>,
}

impl Partition {
    pub fn assignable_tasks<'a>(
        &'a self,
        instance: &'a ProblemInstance,
    ) -> impl Iterator<Item = &'a Task> + 'a {
        self.assignable.iter().map(move |&t| &instance.tasks[t])
    }

    /// Number of complete assignments of the assignable tasks.
    pub fn assignment_space(&self) -> u128 {
        self.qualified
            .iter()
            .fold(1u128, |acc, q| acc.saturating_mul(q.len() as u128))
    }
}

pub fn partition_assignable(instance: &ProblemInstance) -> Partition {
    let mut assignable = Vec::new();
    let mut qualified = Vec::new();
    let mut unassigned = Vec::new();
    for (t, task) in instance.tasks.iter().enumerate() {
        let q = qualified_indices(task, &instance.employees);
        if q.is_empty() {
            unassigned.push(task.id.clone());
        } else {
            assignable.push(t);
            qualified.push(q);
        }
    }
    Partition {
        assignable,
        qualified,
        unassigned,
    }
}

/// Average assignable workload per employee, in nominal hours.
///
/// Tasks nobody is qualified for are left out of the total.
pub fn target_workload(instance: &ProblemInstance) -> Result<f64> {
    if instance.employees.is_empty() {
        return Err(Error::NoEmployees);
    }
    let partition = partition_assignable(instance);
    Ok(target_for(instance, &partition))
}

pub(crate) fn target_for(instance: &ProblemInstance, partition: &Partition) -> f64 {
    let total: f64 = partition
        .assignable_tasks(instance)
        .map(|t| t.duration)
        .sum();
    total / instance.employees.len() as f64
}

/// Number of MILP columns: one per qualified (employee, task) pair plus the
/// two deviation variables.
pub fn variable_count(instance: &ProblemInstance) -> usize {
    partition_assignable(instance)
        .qualified
        .iter()
        .map(Vec::len)
        .sum::<usize>()
        + 2
}

/// Task-to-employee mapping plus the tasks left unassigned.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment {
    pub pairs: BTreeMap<TaskId, EmployeeId>,
    pub unassigned: Vec<TaskId>,
}

impl Assignment {
    /// Builds an assignment from one chosen employee index per assignable task.
    pub fn from_choices(
        instance: &ProblemInstance,
        partition: &Partition,
        choices: &[usize],
    ) -> Self {
        let pairs = partition
            .assignable
            .iter()
            .zip(choices)
            .map(|(&t, &i)| (instance.tasks[t].id.clone(), instance.employees[i].id.clone()))
            .collect();
        Self {
            pairs,
            unassigned: partition.unassigned.clone(),
        }
    }

    pub fn employee_of(&self, task: &TaskId) -> Option<&EmployeeId> {
        self.pairs.get(task)
    }

    /// Checks that `pairs` and `unassigned` partition the task set and that
    /// every assigned employee holds the required skill.
    pub fn check_feasible(&self, instance: &ProblemInstance) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (task_id, emp_id) in &self.pairs {
            let t = instance
                .task_index(task_id)
                .ok_or_else(|| Error::UnknownTask(task_id.clone()))?;
            let e = instance
                .employee_index(emp_id)
                .ok_or_else(|| Error::UnknownEmployee(emp_id.clone()))?;
            if !instance.employees[e].has_skill(&instance.tasks[t].required_skill) {
                return Err(Error::Unqualified {
                    employee: emp_id.clone(),
                    task: task_id.clone(),
                });
            }
            seen.insert(task_id.clone());
        }
        for task_id in &self.unassigned {
            if instance.task_index(task_id).is_none() {
                return Err(Error::UnknownTask(task_id.clone()));
            }
            if !seen.insert(task_id.clone()) {
                return Err(Error::DuplicateTask(task_id.clone()));
            }
        }
        for task in &instance.tasks {
            if !seen.contains(&task.id) {
                return Err(Error::IncompleteAssignment(task.id.clone()));
            }
        }
        Ok(())
    }

    /// Chosen employee index per assignable task of `partition`.
    pub fn choices(
        &self,
        instance: &ProblemInstance,
        partition: &Partition,
    ) -> Result<Vec<usize>> {
        partition
            .assignable
            .iter()
            .map(|&t| {
                let task = &instance.tasks[t];
                let emp = self
                    .pairs
                    .get(&task.id)
                    .ok_or_else(|| Error::IncompleteAssignment(task.id.clone()))?;
                instance
                    .employee_index(emp)
                    .ok_or_else(|| Error::UnknownEmployee(emp.clone()))
            })
            .collect()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, e) in &self.pairs {
            writeln!(f, "{t} -> {e}")?;
        }
        if !self.unassigned.is_empty() {
            let ids: Vec<String> = self.unassigned.iter().map(ToString::to_string).collect();
            writeln!(f, "unassigned: {}", ids.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn sid(s: &str) -> SkillId {
        SkillId::new(s).unwrap()
    }

    pub fn employee(id: &str, perf: i64, skills: &[(&str, f64)]) -> Employee {
        Employee::new(
            EmployeeId::new(id).unwrap(),
            perf,
            skills.iter().map(|&(s, e)| (sid(s), e)),
        )
        .unwrap()
    }

    pub fn task(id: &str, skill: &str, duration: f64, complexity: i64) -> Task {
        Task::new(
            TaskId::new(id).unwrap(),
            sid(skill),
            duration,
            complexity,
            DEFAULT_COMPLEXITY_MAX,
        )
        .unwrap()
    }
}
