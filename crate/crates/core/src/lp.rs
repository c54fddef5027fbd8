//! Bounded-variable revised simplex.
//!
//! Problems are stored as `row_lower <= A x <= row_upper`,
//! `col_lower <= x <= col_upper`. Internally each row gets a logical
//! variable `r = A x` carrying the row bounds, so every constraint becomes
//! `A x - r = 0` and the slack basis `B = -I` is always available.
//!
//! The basis inverse is kept dense and column-major and updated by
//! elementary row operations, with a full refactorization every
//! [`REFACTOR_EVERY`] pivots. Primal pricing is Dantzig's rule and switches
//! to Bland's smallest-index rule after a run of degenerate pivots, which
//! rules out cycling. A dual simplex re-optimizes after bound changes, which
//! is what branch-and-bound needs.

#![allow(clippy::needless_range_loop)]

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{MilpModel, Relation};
use crate::tol;

const REFACTOR_EVERY: usize = 100;
const DEGENERATE_RUN: usize = 50;
const PRIMAL_TOL: f64 = 1e-9;

/// Sparse row `(coefficients, lower, upper)`.
pub type BoundedRow = (Vec<(usize, f64)>, f64, f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The iteration cap was reached before a conclusion.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural column values (empty unless optimal).
    pub values: Vec<f64>,
    pub objective: f64,
}

/// LP in row/column-bounded form with a compressed-column matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    cost: Vec<f64>,
    col_lower: Vec<f64>,
    col_upper: Vec<f64>,
    row_lower: Vec<f64>,
    row_upper: Vec<f64>,
    col_start: Vec<usize>,
    row_index: Vec<usize>,
    value: Vec<f64>,
}

impl LpProblem {
    /// Builds a problem from per-column bounds/costs and sparse rows given as
    /// `(coefficients, lower, upper)`.
    pub fn new(
        cost: Vec<f64>,
        col_lower: Vec<f64>,
        col_upper: Vec<f64>,
        rows: &[BoundedRow],
    ) -> Self {
        let n = cost.len();
        assert_eq!(col_lower.len(), n);
        assert_eq!(col_upper.len(), n);
        let mut counts = vec![0usize; n + 1];
        for (coeffs, _, _) in rows {
            for &(j, _) in coeffs {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let nnz = counts[n];
        let mut row_index = vec![0; nnz];
        let mut value = vec![0.0; nnz];
        let mut next = counts;
        for (r, (coeffs, _, _)) in rows.iter().enumerate() {
            for &(j, a) in coeffs {
                row_index[next[j]] = r;
                value[next[j]] = a;
                next[j] += 1;
            }
        }
        Self {
            cost,
            col_lower,
            col_upper,
            row_lower: rows.iter().map(|r| r.1).collect(),
            row_upper: rows.iter().map(|r| r.2).collect(),
            col_start,
            row_index,
            value,
        }
    }

    /// LP relaxation of a MILP model (integrality dropped).
    pub fn from_model(model: &MilpModel) -> Self {
        let rows: Vec<_> = model
            .rows
            .iter()
            .map(|row| {
                let (lo, hi) = match row.relation {
                    Relation::Le => (f64::NEG_INFINITY, row.rhs),
                    Relation::Ge => (row.rhs, f64::INFINITY),
                    Relation::Eq => (row.rhs, row.rhs),
                };
                (row.coeffs.clone(), lo, hi)
            })
            .collect();
        Self::new(
            model.objective.clone(),
            model.lower.clone(),
            model.upper.clone(),
            &rows,
        )
    }

    pub fn num_cols(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.row_lower.len()
    }

    pub fn solve(&self) -> LpSolution {
        let mut simplex = Simplex::new(self);
        let status = simplex.solve_from_scratch();
        simplex.solution(status)
    }
}

/// Solves the LP relaxation of `model`.
pub fn solve_lp(model: &MilpModel) -> LpSolution {
    LpProblem::from_model(model).solve()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable held at zero.
    Zero,
}

/// Outcome of a dual re-optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Reopt {
    Optimal,
    Infeasible,
    /// The objective reached the cutoff; the node can be discarded.
    Cutoff,
    Failed,
}

/// Simplex state over `n` structural and `m` logical variables.
#[derive(Debug, Clone)]
pub(crate) struct Simplex<'a> {
    lp: &'a LpProblem,
    n: usize,
    m: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basic: Vec<usize>,
    /// Row of each basic variable (`usize::MAX` if nonbasic).
    row_of: Vec<usize>,
    /// Column-major dense basis inverse.
    binv: Vec<f64>,
    since_refactor: usize,
    /// Reduced costs for phase 2, valid for nonbasic variables.
    d: Vec<f64>,
    pub(crate) iterations: usize,
}

impl<'a> Simplex<'a> {
    pub(crate) fn new(lp: &'a LpProblem) -> Self {
        let n = lp.num_cols();
        let m = lp.num_rows();
        let mut lower = lp.col_lower.clone();
        lower.extend_from_slice(&lp.row_lower);
        let mut upper = lp.col_upper.clone();
        upper.extend_from_slice(&lp.row_upper);
        let mut s = Self {
            lp,
            n,
            m,
            lower,
            upper,
            x: vec![0.0; n + m],
            state: vec![VarState::Lower; n + m],
            basic: (n..n + m).collect(),
            row_of: vec![usize::MAX; n + m],
            binv: vec![0.0; m * m],
            since_refactor: 0,
            d: vec![0.0; n + m],
            iterations: 0,
        };
        s.install_slack_basis();
        s
    }

    fn install_slack_basis(&mut self) {
        let (n, m) = (self.n, self.m);
        self.basic = (n..n + m).collect();
        for j in 0..n + m {
            self.row_of[j] = usize::MAX;
        }
        for r in 0..m {
            self.row_of[n + r] = r;
        }
        for j in 0..n {
            self.state[j] = self.default_nonbasic_state(j);
        }
        for r in 0..m {
            self.state[n + r] = VarState::Basic;
        }
        self.binv.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..m {
            self.binv[r * m + r] = -1.0;
        }
        self.since_refactor = 0;
        self.place_nonbasic();
        self.compute_basic_values();
    }

    fn default_nonbasic_state(&self, j: usize) -> VarState {
        if self.lower[j].is_finite() {
            VarState::Lower
        } else if self.upper[j].is_finite() {
            VarState::Upper
        } else {
            VarState::Zero
        }
    }

    fn cost(&self, j: usize) -> f64 {
        if j < self.n {
            self.lp.cost[j]
        } else {
            0.0
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lower[j] == self.upper[j]
    }

    /// Calls `f(row, coeff)` for each nonzero of the internal column `j`.
    #[inline]
    fn for_column(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for k in self.lp.col_start[j]..self.lp.col_start[j + 1] {
                f(self.lp.row_index[k], self.lp.value[k]);
            }
        } else {
            f(j - self.n, -1.0);
        }
    }

    #[inline]
    fn dot_column(&self, j: usize, y: &[f64]) -> f64 {
        let mut s = 0.0;
        self.for_column(j, |r, a| s += a * y[r]);
        s
    }

    /// `B^-1 a_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        self.for_column(j, |k, a| {
            let col = &self.binv[k * m..(k + 1) * m];
            for (o, b) in out.iter_mut().zip(col) {
                *o += a * b;
            }
        });
        out
    }

    /// Row `r` of `B^-1`.
    fn binv_row(&self, r: usize) -> Vec<f64> {
        let m = self.m;
        (0..m).map(|k| self.binv[k * m + r]).collect()
    }

    /// `y^T = c_B^T B^-1` for the given basic costs.
    fn duals(&self, basic_cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let nz: Vec<(usize, f64)> = basic_cost
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, c)| c != 0.0)
            .collect();
        (0..m)
            .map(|k| {
                let col = &self.binv[k * m..(k + 1) * m];
                nz.iter().map(|&(i, c)| c * col[i]).sum()
            })
            .collect()
    }

    fn place_nonbasic(&mut self) {
        for j in 0..self.n + self.m {
            self.x[j] = match self.state[j] {
                VarState::Basic => self.x[j],
                VarState::Lower => self.lower[j],
                VarState::Upper => self.upper[j],
                VarState::Zero => 0.0,
            };
        }
    }

    fn compute_basic_values(&mut self) {
        let m = self.m;
        let mut v = vec![0.0; m];
        for j in 0..self.n + m {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                self.for_column(j, |r, a| v[r] += a * xj);
            }
        }
        // B x_B = -N x_N
        let mut xb = vec![0.0; m];
        for (k, &vk) in v.iter().enumerate() {
            if vk != 0.0 {
                let col = &self.binv[k * m..(k + 1) * m];
                for (o, b) in xb.iter_mut().zip(col) {
                    *o -= vk * b;
                }
            }
        }
        for (r, &j) in self.basic.iter().enumerate() {
            self.x[j] = xb[r];
        }
    }

    fn compute_reduced_costs(&mut self) {
        let basic_cost: Vec<f64> = self.basic.iter().map(|&j| self.cost(j)).collect();
        let y = self.duals(&basic_cost);
        for j in 0..self.n + self.m {
            self.d[j] = if self.state[j] == VarState::Basic {
                0.0
            } else {
                self.cost(j) - self.dot_column(j, &y)
            };
        }
    }

    /// Rebuilds `B^-1` from the basic columns. Returns `false` if singular.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        // Row-major working copy of B augmented in place with the identity.
        let mut b = vec![0.0; m * m];
        for (r, &j) in self.basic.iter().enumerate() {
            self.for_column(j, |i, a| b[i * m + r] = a);
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let mut p = c;
            let mut best = b[c * m + c].abs();
            for r in c + 1..m {
                let v = b[r * m + c].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best < 1e-11 {
                return false;
            }
            if p != c {
                for k in 0..m {
                    b.swap(c * m + k, p * m + k);
                    inv.swap(c * m + k, p * m + k);
                }
            }
            let piv = b[c * m + c];
            for k in 0..m {
                b[c * m + k] /= piv;
                inv[c * m + k] /= piv;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = b[r * m + c];
                if f != 0.0 {
                    for k in 0..m {
                        b[r * m + k] -= f * b[c * m + k];
                        inv[r * m + k] -= f * inv[c * m + k];
                    }
                }
            }
        }
        // inv is B^-1 row-major; store column-major.
        for i in 0..m {
            for k in 0..m {
                self.binv[k * m + i] = inv[i * m + k];
            }
        }
        self.since_refactor = 0;
        true
    }

    fn refresh(&mut self) -> bool {
        if !self.refactor() {
            return false;
        }
        self.place_nonbasic();
        self.compute_basic_values();
        true
    }

    /// Replaces the basic variable of row `r` by `q`, given `alpha = B^-1 a_q`.
    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let ar = alpha[r];
        for k in 0..m {
            let col = &mut self.binv[k * m..(k + 1) * m];
            let v = col[r] / ar;
            if v != 0.0 {
                for (i, c) in col.iter_mut().enumerate() {
                    *c -= alpha[i] * v;
                }
            }
            col[r] = v;
        }
        let leaving = self.basic[r];
        self.row_of[leaving] = usize::MAX;
        self.basic[r] = q;
        self.row_of[q] = r;
        self.state[q] = VarState::Basic;
        self.since_refactor += 1;
        self.iterations += 1;
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lower[j] - PRIMAL_TOL {
            self.lower[j] - v
        } else if v > self.upper[j] + PRIMAL_TOL {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    fn iteration_cap(&self) -> usize {
        50_000 + 50 * (self.n + self.m)
    }

    pub(crate) fn solve_from_scratch(&mut self) -> LpStatus {
        self.install_slack_basis();
        self.primal()
    }

    /// Primal phase 1 then phase 2 from the current basis.
    fn primal(&mut self) -> LpStatus {
        let cap = self.iterations + self.iteration_cap();
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= cap {
                return LpStatus::IterationLimit;
            }
            if self.since_refactor >= REFACTOR_EVERY && !self.refresh() {
                self.install_slack_basis();
            }
            let infeasible = self.basic.iter().any(|&j| self.infeasibility(j) > 0.0);
            let phase_one = infeasible;
            let basic_cost: Vec<f64> = if phase_one {
                self.basic
                    .iter()
                    .map(|&j| {
                        if self.x[j] < self.lower[j] - PRIMAL_TOL {
                            -1.0
                        } else if self.x[j] > self.upper[j] + PRIMAL_TOL {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            } else {
                self.basic.iter().map(|&j| self.cost(j)).collect()
            };
            let y = self.duals(&basic_cost);
            let bland = degenerate >= DEGENERATE_RUN;

            // pricing
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..self.n + self.m {
                let st = self.state[j];
                if st == VarState::Basic || self.is_fixed(j) {
                    continue;
                }
                let cj = if phase_one { 0.0 } else { self.cost(j) };
                let dj = cj - self.dot_column(j, &y);
                let dir = match st {
                    VarState::Lower if dj < -tol::REDUCED_COST => 1.0,
                    VarState::Upper if dj > tol::REDUCED_COST => -1.0,
                    VarState::Zero if dj.abs() > tol::REDUCED_COST => -dj.signum(),
                    _ => continue,
                };
                if bland {
                    entering = Some((j, dir, dj));
                    break;
                }
                if entering.is_none_or(|(_, _, best)| dj.abs() > best.abs()) {
                    entering = Some((j, dir, dj));
                }
            }
            let Some((q, dir, _)) = entering else {
                return if phase_one {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                };
            };

            let alpha = self.ftran(q);
            // ratio test
            let mut theta = self.upper[q] - self.lower[q];
            let mut leave: Option<(usize, f64)> = None; // (row, bound value)
            let mut leave_alpha = 0.0f64;
            for r in 0..self.m {
                let a = alpha[r];
                if a.abs() <= tol::PIVOT {
                    continue;
                }
                let j = self.basic[r];
                let rate = -dir * a;
                let v = self.x[j];
                let bound = if rate < 0.0 {
                    if phase_one && v > self.upper[j] + PRIMAL_TOL {
                        self.upper[j]
                    } else if v < self.lower[j] - PRIMAL_TOL {
                        continue;
                    } else {
                        self.lower[j]
                    }
                } else if phase_one && v < self.lower[j] - PRIMAL_TOL {
                    self.lower[j]
                } else if v > self.upper[j] + PRIMAL_TOL {
                    continue;
                } else {
                    self.upper[j]
                };
                if !bound.is_finite() {
                    continue;
                }
                let t = ((bound - v) / rate).max(0.0);
                if t < theta - 1e-12 {
                    theta = t;
                    leave = Some((r, bound));
                    leave_alpha = a.abs();
                } else if t <= theta + 1e-12 {
                    let replace = match leave {
                        None => false,
                        Some((lr, _)) => {
                            if bland {
                                j < self.basic[lr]
                            } else {
                                a.abs() > leave_alpha
                            }
                        }
                    };
                    if replace {
                        theta = theta.min(t);
                        leave = Some((r, bound));
                        leave_alpha = a.abs();
                    }
                }
            }
            if !theta.is_finite() {
                if phase_one {
                    // Cannot happen with exact arithmetic; recover by refactoring.
                    if !self.refresh() {
                        self.install_slack_basis();
                    }
                    degenerate = DEGENERATE_RUN;
                    continue;
                }
                return LpStatus::Unbounded;
            }
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            let step = dir * theta;
            for r in 0..self.m {
                if alpha[r] != 0.0 {
                    let j = self.basic[r];
                    self.x[j] -= alpha[r] * step;
                }
            }
            self.x[q] += step;
            match leave {
                None => {
                    // bound flip
                    self.state[q] = if dir > 0.0 {
                        self.x[q] = self.upper[q];
                        VarState::Upper
                    } else {
                        self.x[q] = self.lower[q];
                        VarState::Lower
                    };
                    self.iterations += 1;
                }
                Some((r, bound)) => {
                    let j = self.basic[r];
                    self.x[j] = bound;
                    self.state[j] = if bound == self.lower[j] {
                        VarState::Lower
                    } else {
                        VarState::Upper
                    };
                    self.pivot(r, q, &alpha);
                }
            }
        }
    }

    pub(crate) fn objective(&self) -> f64 {
        (0..self.n).map(|j| self.lp.cost[j] * self.x[j]).sum()
    }

    pub(crate) fn structural(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub(crate) fn solution(&self, status: LpStatus) -> LpSolution {
        if status == LpStatus::Optimal {
            LpSolution {
                status,
                values: self.structural().to_vec(),
                objective: self.objective(),
            }
        } else {
            LpSolution {
                status,
                values: Vec::new(),
                objective: match status {
                    LpStatus::Unbounded => f64::NEG_INFINITY,
                    _ => f64::INFINITY,
                },
            }
        }
    }

    /// Reduced costs of the nonbasic structural columns at the current
    /// basis, with whether each sits at its upper bound.
    pub(crate) fn nonbasic_reduced_costs(&mut self) -> Vec<(usize, bool, f64)> {
        self.compute_reduced_costs();
        (0..self.n)
            .filter(|&j| self.lower[j] < self.upper[j])
            .filter_map(|j| match self.state[j] {
                VarState::Lower => Some((j, false, self.d[j])),
                VarState::Upper => Some((j, true, self.d[j])),
                _ => None,
            })
            .collect()
    }

    pub(crate) fn basis(&self) -> Vec<u32> {
        self.basic.iter().map(|&j| j as u32).collect()
    }

    pub(crate) fn set_col_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub(crate) fn reset_col_bounds(&mut self) {
        self.lower[..self.n].copy_from_slice(&self.lp.col_lower);
        self.upper[..self.n].copy_from_slice(&self.lp.col_upper);
    }

    /// Installs a basis by variable list and refactors. Nonbasic states are
    /// chosen later by [`Simplex::reoptimize`].
    pub(crate) fn load_basis(&mut self, basic: &[u32]) -> bool {
        for j in 0..self.n + self.m {
            self.row_of[j] = usize::MAX;
            if self.state[j] == VarState::Basic {
                self.state[j] = self.default_nonbasic_state(j);
            }
        }
        for (r, &j) in basic.iter().enumerate() {
            let j = j as usize;
            self.basic[r] = j;
            self.row_of[j] = r;
            self.state[j] = VarState::Basic;
        }
        if self.refactor() {
            true
        } else {
            self.install_slack_basis();
            false
        }
    }

    /// Re-optimizes after bound changes with the dual simplex, falling back
    /// to the primal method if the basis is not dual feasible. Stops early
    /// once the objective reaches `cutoff`.
    pub(crate) fn reoptimize(&mut self, cutoff: f64) -> Reopt {
        if self.since_refactor >= REFACTOR_EVERY && !self.refactor() {
            self.install_slack_basis();
        }
        self.compute_reduced_costs();
        // pick dual-feasible nonbasic positions
        let mut dual_feasible = true;
        for j in 0..self.n + self.m {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let (lo, hi) = (self.lower[j], self.upper[j]);
            let dj = self.d[j];
            self.state[j] = if lo == hi {
                VarState::Lower
            } else if lo.is_finite() && hi.is_finite() {
                if dj < 0.0 {
                    VarState::Upper
                } else {
                    VarState::Lower
                }
            } else if lo.is_finite() {
                if dj < -tol::REDUCED_COST {
                    dual_feasible = false;
                }
                VarState::Lower
            } else if hi.is_finite() {
                if dj > tol::REDUCED_COST {
                    dual_feasible = false;
                }
                VarState::Upper
            } else {
                if dj.abs() > tol::REDUCED_COST {
                    dual_feasible = false;
                }
                VarState::Zero
            };
        }
        self.place_nonbasic();
        self.compute_basic_values();
        if !dual_feasible {
            return self.primal_fallback(cutoff);
        }
        match self.dual(cutoff) {
            Reopt::Failed => self.primal_fallback(cutoff),
            other => other,
        }
    }

    fn primal_fallback(&mut self, cutoff: f64) -> Reopt {
        match self.primal() {
            LpStatus::Optimal => {
                if self.objective() >= cutoff {
                    Reopt::Cutoff
                } else {
                    Reopt::Optimal
                }
            }
            LpStatus::Infeasible => Reopt::Infeasible,
            _ => Reopt::Failed,
        }
    }

    fn dual(&mut self, cutoff: f64) -> Reopt {
        let cap = self.iterations + self.iteration_cap();
        let mut stalled = 0usize;
        let mut last_obj = f64::NEG_INFINITY;
        let mut last_inf = f64::INFINITY;
        loop {
            if self.iterations >= cap {
                return Reopt::Failed;
            }
            if self.since_refactor >= REFACTOR_EVERY {
                if !self.refresh() {
                    return Reopt::Failed;
                }
                self.compute_reduced_costs();
            }
            let obj = self.objective();
            if obj >= cutoff {
                return Reopt::Cutoff;
            }
            // progress means a higher objective or less primal infeasibility
            let infeasibility: f64 = self.basic.iter().map(|&j| self.infeasibility(j)).sum();
            if obj > last_obj + 1e-12 || infeasibility < last_inf - 1e-9 {
                stalled = 0;
                last_obj = last_obj.max(obj);
                last_inf = last_inf.min(infeasibility);
            } else {
                stalled += 1;
            }
            let bland = stalled >= DEGENERATE_RUN;

            // leaving row
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let j = self.basic[r];
                let inf = self.infeasibility(j);
                if inf <= 0.0 {
                    continue;
                }
                if bland {
                    if leave.is_none_or(|(lr, _)| j < self.basic[lr]) {
                        leave = Some((r, inf));
                    }
                } else if leave.is_none_or(|(_, best)| inf > best) {
                    leave = Some((r, inf));
                }
            }
            let Some((r, _)) = leave else {
                return Reopt::Optimal;
            };
            let jl = self.basic[r];
            let above = self.x[jl] > self.upper[jl];
            let target = if above { self.upper[jl] } else { self.lower[jl] };

            let rho = self.binv_row(r);
            let mut alpha_row = vec![0.0; self.n + self.m];
            let mut best: Option<(usize, f64, f64)> = None; // (var, ratio, alpha_r)
            for j in 0..self.n + self.m {
                let st = self.state[j];
                if st == VarState::Basic || self.is_fixed(j) {
                    continue;
                }
                let a = self.dot_column(j, &rho);
                alpha_row[j] = a;
                if a.abs() <= tol::PIVOT {
                    continue;
                }
                // x_Bl changes by -a per unit increase of x_j
                let ok = match st {
                    VarState::Lower => (a > 0.0) == above,
                    VarState::Upper => (a < 0.0) == above,
                    VarState::Zero => true,
                    VarState::Basic => false,
                };
                if !ok {
                    continue;
                }
                let ratio = self.d[j].abs() / a.abs();
                let take = match best {
                    None => true,
                    Some((bj, br, ba)) => {
                        if ratio < br - 1e-12 {
                            true
                        } else if ratio <= br + 1e-12 {
                            if bland {
                                j < bj
                            } else {
                                a.abs() > ba.abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if take {
                    best = Some((j, ratio, a));
                }
            }
            let Some((q, _, arq)) = best else {
                return Reopt::Infeasible;
            };

            let alpha = self.ftran(q);
            if (alpha[r] - arq).abs() > 1e-7 * (1.0 + arq.abs()) {
                // inverse has drifted; refactor and retry
                if !self.refresh() {
                    return Reopt::Failed;
                }
                self.compute_reduced_costs();
                continue;
            }
            let delta = (self.x[jl] - target) / alpha[r];
            for i in 0..self.m {
                if alpha[i] != 0.0 {
                    let j = self.basic[i];
                    self.x[j] -= alpha[i] * delta;
                }
            }
            self.x[q] += delta;
            self.x[jl] = target;
            self.state[jl] = if above {
                VarState::Upper
            } else {
                VarState::Lower
            };

            // reduced-cost update along the pivot row
            let dq = self.d[q];
            let ratio = dq / alpha[r];
            for (j, &a) in alpha_row.iter().enumerate() {
                if a != 0.0 && j != q {
                    self.d[j] -= ratio * a;
                }
            }
            self.d[jl] = -ratio;
            self.d[q] = 0.0;
            self.pivot(r, q, &alpha);
        }
    }

    /// Largest bound or row violation of the current point (diagnostics).
    #[cfg(test)]
    pub(crate) fn max_infeasibility(&self) -> f64 {
        (0..self.n + self.m)
            .map(|j| self.infeasibility(j))
            .fold(0.0, f64::max)
    }
}
