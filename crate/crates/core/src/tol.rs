//! Numeric tolerances shared by the solver, the model builder and the checks.

/// Absolute slack allowed on constraint rows of an optimal LP solution.
pub const FEASIBILITY: f64 = 1e-7;

/// Distance from 0 or 1 below which an assignment column counts as integral.
pub const INTEGRALITY: f64 = 1e-6;

/// Objective values closer than this are treated as equal.
pub const OBJECTIVE: f64 = 1e-9;

/// Bound violation tolerated on variable values.
pub const BOUND: f64 = 1e-9;

/// Smallest pivot magnitude the simplex accepts.
pub(crate) const PIVOT: f64 = 1e-9;

/// Reduced-cost threshold for pricing.
pub(crate) const REDUCED_COST: f64 = 1e-9;
