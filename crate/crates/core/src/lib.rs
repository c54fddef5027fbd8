//! Exact task allocation for skill-constrained workforces.
//!
//! The crate builds two mixed-integer models over a [`ProblemInstance`]: a
//! workload-balance model that minimizes the largest overload plus the largest
//! underload against the average workload, and a cost-aware model that blends
//! that balance term with a per-assignment cost. Both are solved by a native
//! branch-and-bound over a bounded-variable simplex ([`bnb`], [`lp`]), with an
//! exhaustive enumerator ([`oracle`]) for small instances.
//!
//! Around the solver sit the adaptive re-estimation loop ([`adaptive`]),
//! the cost metric and hyperparameter search ([`cost`]), fairness metrics and
//! baseline assigners ([`metrics`]), and a seeded instance generator
//! ([`synth`]).
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. Without `std` the solver has no wall clock, so time limits are
//! only honoured through [`bnb::solve_milp_with_clock`].

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod adaptive;
pub mod bnb;
pub mod cost;
pub mod domain;
pub mod error;
mod incumbent;
pub mod lp;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod synth;
pub mod tol;

pub use adaptive::{
    filter_employees, run_adaptive, update_efficiency, AdaptiveConfig, AdaptiveTrace, FilterRule,
    ObservationSource, SimulatedWorkforce,
};
pub use bnb::{optimality_gap, solve_milp, Gap, MilpResult, MilpStatus, SolveConfig};
pub use cost::{assignment_cost, skill_mismatch, Hyperparams, TuningResult};
pub use domain::{
    partition_assignable, qualified_set, target_workload, variable_count, Assignment, Employee,
    EmployeeId, ProblemInstance, SkillId, Task, TaskId,
};
pub use error::{Error, Result};
pub use lp::{solve_lp, LpSolution, LpStatus};
pub use metrics::{gini, jain, variance, WorkloadVector};
pub use model::{build_balance_model, build_cost_model, extract_assignment, MilpModel};
pub use oracle::brute_force;
