use alloc::string::String;

use crate::domain::{EmployeeId, SkillId, TaskId};

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid identifier {0:?}: must be non-empty, comma-free and trimmed")]
    InvalidId(String),
    #[error("employee {employee}: efficiency {value} for skill {skill} outside {range}")]
    EfficiencyOutOfRange {
        employee: EmployeeId,
        skill: SkillId,
        value: f64,
        range: &'static str,
    },
    #[error("employee {employee}: performance rating {value} outside [1, 5]")]
    PerformanceOutOfRange { employee: EmployeeId, value: i64 },
    #[error("employee {employee}: duplicate entry for skill {skill}")]
    DuplicateSkill { employee: EmployeeId, skill: SkillId },
    #[error("employee {employee}: conflicting performance ratings {first} and {second}")]
    ConflictingPerformance {
        employee: EmployeeId,
        first: i64,
        second: i64,
    },
    #[error("employee {0} has no skills")]
    NoSkills(EmployeeId),
    #[error("duplicate employee id {0}")]
    DuplicateEmployee(EmployeeId),
    #[error("duplicate task id {0}")]
    DuplicateTask(TaskId),
    #[error("task {task}: duration {value} must be positive and finite")]
    NonPositiveDuration { task: TaskId, value: f64 },
    #[error("task {task}: complexity {value} outside [1, {max}]")]
    ComplexityOutOfRange { task: TaskId, value: i64, max: u32 },
    #[error("instance has no employees")]
    NoEmployees,
    #[error("unknown employee {0}")]
    UnknownEmployee(EmployeeId),
    #[error("unknown task {0}")]
    UnknownTask(TaskId),
    #[error("employee {employee} is not qualified for task {task}")]
    Unqualified { employee: EmployeeId, task: TaskId },
    #[error("assignment does not cover task {0}")]
    IncompleteAssignment(TaskId),
    #[error("task {0} is assigned more than once")]
    MultipleAssignment(TaskId),
    #[error("missing cost for employee {employee} on task {task}")]
    MissingCost { employee: EmployeeId, task: TaskId },
    #[error("column {column} has fractional value {value}")]
    Fractional { column: usize, value: f64 },
    #[error("solution has {got} entries, model has {expected} columns")]
    SolutionLength { expected: usize, got: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{0} is undefined for an empty sequence")]
    EmptyInput(&'static str),
    #[error("durations must be positive, got nominal {nominal} and actual {actual}")]
    NonPositiveTime { nominal: f64, actual: f64 },
    #[error("brute force would enumerate {0} assignments (limit 10^7); use the branch-and-bound solver")]
    TooManyAssignments(u128),
    #[error("no observation for iteration {iteration}, employee {employee}, task {task}")]
    MissingObservation {
        iteration: usize,
        employee: EmployeeId,
        task: TaskId,
    },
    #[error("observation for employee {employee}, task {task} must be positive, got {value}")]
    InvalidObservation {
        employee: EmployeeId,
        task: TaskId,
        value: f64,
    },
    #[error("no true efficiency for employee {employee}, skill {skill}")]
    MissingTrueEfficiency { employee: EmployeeId, skill: SkillId },
    #[error("solver found no feasible allocation in iteration {iteration}")]
    InfeasibleIteration { iteration: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
