//! Best-first branch-and-bound over the LP relaxation.
//!
//! Nodes are ordered by their parent's LP bound, ties by creation order, so
//! the down branch of a split is explored before the up branch. The branch
//! column is the fractional assign column closest to 0.5 (lowest index on
//! ties). Each node stores only its bound fixings and its parent's basis; on
//! selection the basis is refactored and the dual simplex re-optimizes.

use alloc::collections::BinaryHeap;
use alloc::rc::Rc;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::domain::Assignment;
use crate::error::{Error, Result};
use crate::incumbent::Evaluator;
use crate::lp::{LpProblem, LpStatus, Reopt, Simplex};
use crate::model::{extract_assignment, MilpModel};
use crate::tol;

/// Branch-and-bound limits and tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Relative optimality gap at which the search stops (fraction, not percent).
    pub gap_tolerance: f64,
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    pub node_limit: Option<u64>,
    /// Reserved; the solver is deterministic.
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            gap_tolerance: 1e-6,
            time_limit: 60.0,
            node_limit: None,
            seed: 0,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gap_tolerance.is_nan() || self.gap_tolerance < 0.0 {
            return Err(Error::InvalidConfig(alloc::format!(
                "gap tolerance {} must be >= 0",
                self.gap_tolerance
            )));
        }
        if self.time_limit.is_nan() || self.time_limit <= 0.0 {
            return Err(Error::InvalidConfig(alloc::format!(
                "time limit {} must be > 0",
                self.time_limit
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    /// Search finished or the gap tolerance was met.
    Optimal,
    /// Stopped at the node limit with an incumbent.
    Feasible,
    Infeasible,
    /// Stopped at the time limit.
    TimeLimit,
}

impl MilpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            MilpStatus::Optimal => "optimal",
            MilpStatus::Feasible => "feasible",
            MilpStatus::Infeasible => "infeasible",
            MilpStatus::TimeLimit => "time_limit",
        }
    }
}

/// Optimality gap in percent. `absolute` is set when the bound is zero and
/// the relative formula is undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub percent: f64,
    pub absolute: bool,
}

/// `(incumbent - bound) / |bound| * 100`, or `(incumbent - bound) * 100`
/// flagged absolute when `bound == 0`.
pub fn optimality_gap(incumbent: f64, bound: f64) -> Gap {
    if incumbent == bound {
        return Gap {
            percent: 0.0,
            absolute: bound == 0.0,
        };
    }
    if bound == 0.0 {
        Gap {
            percent: (incumbent - bound) * 100.0,
            absolute: true,
        }
    } else {
        Gap {
            percent: (incumbent - bound) / bound.abs() * 100.0,
            absolute: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpResult {
    pub status: MilpStatus,
    pub assignment: Assignment,
    /// Column values of the incumbent (empty without one).
    pub solution: Vec<f64>,
    pub objective: f64,
    pub best_bound: f64,
    pub root_bound: f64,
    pub gap: Gap,
    pub nodes: u64,
    pub lp_iterations: u64,
    /// Seconds spent in the solve.
    pub wall_time: f64,
}

impl MilpResult {
    pub fn gap_percent(&self) -> f64 {
        self.gap.percent
    }

    pub(crate) fn infeasible(wall_time: f64, nodes: u64, unassigned: Vec<crate::domain::TaskId>) -> Self {
        Self {
            status: MilpStatus::Infeasible,
            assignment: Assignment {
                pairs: Default::default(),
                unassigned,
            },
            solution: Vec::new(),
            objective: f64::INFINITY,
            best_bound: f64::INFINITY,
            root_bound: f64::INFINITY,
            gap: Gap {
                percent: f64::INFINITY,
                absolute: false,
            },
            nodes,
            lp_iterations: 0,
            wall_time,
        }
    }
}

/// Source of elapsed seconds for time limits.
pub trait Clock {
    fn elapsed(&self) -> f64;
}

/// A clock that never advances; time limits are not enforced.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed(&self) -> f64 {
        0.0
    }
}

#[cfg(feature = "std")]
#[derive(Debug, Clone, Copy)]
pub struct StdClock(std::time::Instant);

#[cfg(feature = "std")]
impl StdClock {
    pub fn start() -> Self {
        Self(std::time::Instant::now())
    }
}

#[cfg(feature = "std")]
impl Clock for StdClock {
    fn elapsed(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Solves `model` to the configured gap, time and node limits.
pub fn solve_milp(model: &MilpModel, cfg: &SolveConfig) -> MilpResult {
    #[cfg(feature = "std")]
    {
        solve_milp_with_clock(model, cfg, &StdClock::start())
    }
    #[cfg(not(feature = "std"))]
    {
        solve_milp_with_clock(model, cfg, &NoClock)
    }
}

enum Fixings {
    Root,
    Fix {
        column: usize,
        value: f64,
        parent: Rc<Fixings>,
    },
}

fn extend(mut parent: Rc<Fixings>, fixes: &[(usize, f64)]) -> Rc<Fixings> {
    for &(column, value) in fixes {
        parent = Rc::new(Fixings::Fix {
            column,
            value,
            parent,
        });
    }
    parent
}

struct Node {
    bound: f64,
    seq: u64,
    fixings: Rc<Fixings>,
    basis: Rc<Vec<u32>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: invert so the smallest (bound, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(other.seq.cmp(&self.seq))
    }
}

/// Down child taken straight after its parent without going through the heap.
struct Plunge {
    bound: f64,
    fixings: Rc<Fixings>,
    /// Fixings to apply on top of the current LP bounds.
    delta: Vec<(usize, f64)>,
}

struct Incumbent {
    choices: Vec<usize>,
    objective: f64,
}

/// Local-search rounds spent on the root incumbent.
const ROOT_SEARCH_ROUNDS: usize = 400;
/// Fraction of the time limit the root local search may use.
const ROOT_SEARCH_SHARE: f64 = 0.5;

struct Search<'m> {
    cfg: &'m SolveConfig,
    eval: Evaluator<'m>,
    incumbent: Option<Incumbent>,
    /// Root reduced costs, for fixing columns globally as the incumbent improves.
    root_reduced: Vec<(usize, bool, f64)>,
    root_bound: f64,
    global: Vec<(usize, f64)>,
    /// Smallest bound among subtrees discarded against the cutoff.
    pruned_min: f64,
    seq: u64,
}

impl<'m> Search<'m> {
    fn offer(&mut self, mut choices: Vec<usize>, polish: bool) -> bool {
        let mut objective = self.eval.objective(&choices);
        if polish {
            objective = self.eval.improve(&mut choices, 50);
        }
        let better = self
            .incumbent
            .as_ref()
            .is_none_or(|inc| objective < inc.objective - 1e-12);
        if better {
            log::debug!("new incumbent {objective}");
            self.incumbent = Some(Incumbent { choices, objective });
            self.refresh_global();
        }
        better
    }

    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            None => f64::INFINITY,
            Some(inc) => {
                let g = self.cfg.gap_tolerance;
                inc.objective - tol::OBJECTIVE.max(g * inc.objective.abs() / (1.0 + g))
            }
        }
    }

    fn gap_closed(&self, bound: f64) -> bool {
        match &self.incumbent {
            None => false,
            Some(inc) => {
                let diff = inc.objective - bound;
                diff <= tol::OBJECTIVE || diff <= self.cfg.gap_tolerance * bound.abs()
            }
        }
    }

    fn prune(&mut self, bound: f64) {
        self.pruned_min = self.pruned_min.min(bound);
    }

    fn refresh_global(&mut self) {
        let cutoff = self.cutoff();
        let root = self.root_bound;
        self.global = fixable(&self.root_reduced, root, cutoff);
    }
}

/// Columns whose reduced cost pushes the bound past `cutoff` if moved off
/// their current bound, with the value they can be fixed at.
fn fixable(reduced: &[(usize, bool, f64)], bound: f64, cutoff: f64) -> Vec<(usize, f64)> {
    if !cutoff.is_finite() {
        return Vec::new();
    }
    reduced
        .iter()
        .filter_map(|&(j, at_upper, d)| {
            if !at_upper && d > 0.0 && bound + d >= cutoff {
                Some((j, 0.0))
            } else if at_upper && d < 0.0 && bound - d >= cutoff {
                Some((j, 1.0))
            } else {
                None
            }
        })
        .collect()
}

/// Branch-and-bound with an explicit clock.
pub fn solve_milp_with_clock(model: &MilpModel, cfg: &SolveConfig, clock: &dyn Clock) -> MilpResult {
    let started = clock.elapsed();
    let elapsed = || clock.elapsed() - started;
    let lp = LpProblem::from_model(model);
    let mut sx = Simplex::new(&lp);
    let root_status = sx.solve_from_scratch();
    if root_status != LpStatus::Optimal {
        log::debug!("root LP ended with {root_status:?}");
        return MilpResult::infeasible(elapsed(), 1, model.unassigned().to_vec());
    }
    let root_bound = sx.objective();
    let mut search = Search {
        cfg,
        eval: Evaluator::new(model),
        incumbent: None,
        root_reduced: sx.nonbasic_reduced_costs(),
        root_bound,
        global: Vec::new(),
        pruned_min: f64::INFINITY,
        seq: 0,
    };
    let rounded = search.eval.round(sx.structural());
    search.offer(rounded.clone(), true);
    let constructed = search.eval.construct();
    search.offer(constructed, true);
    if !search.gap_closed(root_bound) {
        let start = search.incumbent.as_ref().map(|i| i.choices.clone()).unwrap_or(rounded);
        let stop = || elapsed() >= ROOT_SEARCH_SHARE * cfg.time_limit;
        let (choices, _) = search.eval.iterated(&start, ROOT_SEARCH_ROUNDS, cfg.seed, &stop);
        search.offer(choices, false);
    }
    log::debug!(
        "root bound {root_bound}, incumbent {:?}",
        search.incumbent.as_ref().map(|i| i.objective)
    );

    let mut nodes: u64 = 1;
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut status = MilpStatus::Optimal;
    // bound of the open work left when the search stopped early
    let mut open_bound: Option<f64> = None;
    let mut plunge = process(&mut search, &mut sx, root_bound, &Rc::new(Fixings::Root), &mut heap);

    loop {
        let bound = if let Some(p) = plunge.take() {
            if p.bound >= search.cutoff() {
                search.prune(p.bound);
                continue;
            }
            if let Some(stop) = limit_hit(cfg, nodes, &elapsed) {
                status = stop;
                open_bound = Some(p.bound.min(heap.peek().map_or(f64::INFINITY, |n| n.bound)));
                break;
            }
            nodes += 1;
            for &(j, v) in &p.delta {
                sx.set_col_bounds(j, v, v);
            }
            match resolve(&mut sx, &search, &p.fixings) {
                NodeLp::Bound(b) => {
                    plunge = process(&mut search, &mut sx, b, &p.fixings, &mut heap);
                    b
                }
                NodeLp::Cutoff => {
                    search.prune(p.bound.max(search.cutoff()));
                    continue;
                }
                NodeLp::Infeasible => continue,
            }
        } else {
            let Some(node) = heap.pop() else { break };
            if search.gap_closed(node.bound) {
                open_bound = Some(node.bound);
                break;
            }
            if node.bound >= search.cutoff() {
                search.prune(node.bound);
                continue;
            }
            if let Some(stop) = limit_hit(cfg, nodes, &elapsed) {
                status = stop;
                open_bound = Some(node.bound);
                break;
            }
            nodes += 1;
            sx.reset_col_bounds();
            for &(j, v) in &search.global {
                sx.set_col_bounds(j, v, v);
            }
            apply(&mut sx, &node.fixings);
            if !sx.load_basis(&node.basis) {
                log::debug!("singular basis at node {nodes}; restarting from slack basis");
            }
            match resolve(&mut sx, &search, &node.fixings) {
                NodeLp::Bound(b) => {
                    plunge = process(&mut search, &mut sx, b, &node.fixings, &mut heap);
                    b
                }
                NodeLp::Cutoff => {
                    search.prune(node.bound.max(search.cutoff()));
                    continue;
                }
                NodeLp::Infeasible => continue,
            }
        };
        if nodes.is_multiple_of(1000) {
            log::debug!(
                "node {nodes} bound {bound} incumbent {:?} open {}",
                search.incumbent.as_ref().map(|i| i.objective),
                heap.len()
            );
        }
    }

    let Some(inc) = search.incumbent.take() else {
        return MilpResult::infeasible(elapsed(), nodes, model.unassigned().to_vec());
    };
    let mut best_bound = open_bound
        .unwrap_or(f64::INFINITY)
        .min(search.pruned_min)
        .min(inc.objective)
        .max(root_bound);
    if inc.objective - best_bound <= tol::OBJECTIVE {
        best_bound = inc.objective;
    }
    let solution = model.solution_from_choices(&inc.choices);
    let assignment = extract_assignment(model, &solution)
        .expect("incumbents are integral and cover every assignable task");
    MilpResult {
        status,
        assignment,
        gap: optimality_gap(inc.objective, best_bound),
        objective: inc.objective,
        solution,
        best_bound,
        root_bound,
        nodes,
        lp_iterations: sx.iterations as u64,
        wall_time: elapsed(),
    }
}

fn limit_hit(cfg: &SolveConfig, nodes: u64, elapsed: &dyn Fn() -> f64) -> Option<MilpStatus> {
    if elapsed() >= cfg.time_limit {
        Some(MilpStatus::TimeLimit)
    } else if cfg.node_limit.is_some_and(|limit| nodes >= limit) {
        Some(MilpStatus::Feasible)
    } else {
        None
    }
}

enum NodeLp {
    Bound(f64),
    Infeasible,
    Cutoff,
}

/// Re-optimizes the current node.
fn resolve(sx: &mut Simplex<'_>, search: &Search<'_>, fixings: &Rc<Fixings>) -> NodeLp {
    match sx.reoptimize(search.cutoff()) {
        Reopt::Optimal => NodeLp::Bound(sx.objective()),
        Reopt::Infeasible => NodeLp::Infeasible,
        Reopt::Cutoff => NodeLp::Cutoff,
        Reopt::Failed => {
            // rebuild from a slack basis under the same bounds
            sx.reset_col_bounds();
            for &(j, v) in &search.global {
                sx.set_col_bounds(j, v, v);
            }
            apply(sx, fixings);
            match sx.solve_from_scratch() {
                LpStatus::Optimal if sx.objective() < search.cutoff() => NodeLp::Bound(sx.objective()),
                LpStatus::Optimal => NodeLp::Cutoff,
                _ => NodeLp::Infeasible,
            }
        }
    }
}

fn apply(sx: &mut Simplex<'_>, fixings: &Fixings) {
    let mut cur = fixings;
    while let Fixings::Fix {
        column,
        value,
        parent,
    } = cur
    {
        sx.set_col_bounds(*column, *value, *value);
        cur = parent;
    }
}

/// Handles a solved node: records integral points, tries rounding, fixes
/// columns by reduced cost, pushes the up child and returns the down child
/// for plunging.
fn process(
    search: &mut Search<'_>,
    sx: &mut Simplex<'_>,
    bound: f64,
    fixings: &Rc<Fixings>,
    heap: &mut BinaryHeap<Node>,
) -> Option<Plunge> {
    let model = search.eval.model();
    let values = sx.structural();
    let mut branch: Option<(usize, f64)> = None;
    for k in 0..model.var_index.task_count() {
        for j in model.var_index.task_range(k) {
            let v = values[j];
            let frac = v - libm::floor(v);
            if frac <= tol::INTEGRALITY || frac >= 1.0 - tol::INTEGRALITY {
                continue;
            }
            let dist = (v - 0.5).abs();
            if branch.is_none_or(|(_, best)| dist < best) {
                branch = Some((j, dist));
            }
        }
    }
    let choices = search.eval.round(values);
    let Some((column, _)) = branch else {
        search.offer(choices, false);
        return None;
    };
    if search.offer(choices, false) {
        let c = search.incumbent.as_ref().map(|i| i.choices.clone()).unwrap_or_default();
        search.offer(c, true);
    }
    if bound >= search.cutoff() {
        search.prune(bound);
        return None;
    }
    let local = fixable(&sx.nonbasic_reduced_costs(), bound, search.cutoff());
    let base = extend(Rc::clone(fixings), &local);
    let basis = Rc::new(sx.basis());
    search.seq += 1;
    heap.push(Node {
        bound,
        seq: search.seq,
        fixings: extend(Rc::clone(&base), &[(column, 1.0)]),
        basis,
    });
    search.seq += 1;
    let mut delta = local;
    delta.push((column, 0.0));
    Some(Plunge {
        bound,
        fixings: extend(base, &[(column, 0.0)]),
        delta,
    })
}
