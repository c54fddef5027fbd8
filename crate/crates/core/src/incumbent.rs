//! Primal heuristics for branch-and-bound: LP rounding, a load-balancing
//! construction, and move/swap local search over integral choices.

#![allow(clippy::needless_range_loop)]

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Column, DeviationForm, MilpModel};

/// Objective bookkeeping for a choice vector (one column offset per task).
pub(crate) struct Evaluator<'m> {
    model: &'m MilpModel,
    employee_of: Vec<usize>,
    dev_plus_cost: f64,
    dev_minus_cost: f64,
    min_max: bool,
}

/// Per-employee loads with running sums and the three largest and smallest
/// entries, so that a move touching two employees scores in constant time.
struct LoadState {
    w: Vec<f64>,
    sum: f64,
    sum_sq: f64,
    top: [(f64, usize); 3],
    bottom: [(f64, usize); 3],
}

impl LoadState {
    fn new(w: Vec<f64>) -> Self {
        let mut s = Self {
            w,
            sum: 0.0,
            sum_sq: 0.0,
            top: [(f64::NEG_INFINITY, usize::MAX); 3],
            bottom: [(f64::INFINITY, usize::MAX); 3],
        };
        s.refresh();
        s
    }

    fn refresh(&mut self) {
        self.sum = self.w.iter().sum();
        self.sum_sq = self.w.iter().map(|x| x * x).sum();
        self.top = [(f64::NEG_INFINITY, usize::MAX); 3];
        self.bottom = [(f64::INFINITY, usize::MAX); 3];
        for (i, &x) in self.w.iter().enumerate() {
            insert_top(&mut self.top, (x, i));
            insert_bottom(&mut self.bottom, (x, i));
        }
    }

    /// Max and min after employees `a` and `b` take loads `wa` and `wb`.
    fn extremes_with(&self, a: usize, wa: f64, b: usize, wb: f64) -> (f64, f64) {
        let other_max = self
            .top
            .iter()
            .find(|&&(_, i)| i != a && i != b)
            .map_or(f64::NEG_INFINITY, |&(x, _)| x);
        let other_min = self
            .bottom
            .iter()
            .find(|&&(_, i)| i != a && i != b)
            .map_or(f64::INFINITY, |&(x, _)| x);
        (other_max.max(wa).max(wb), other_min.min(wa).min(wb))
    }
}

fn insert_top(slots: &mut [(f64, usize); 3], item: (f64, usize)) {
    if item.0 > slots[2].0 {
        slots[2] = item;
        if slots[2].0 > slots[1].0 {
            slots.swap(1, 2);
            if slots[1].0 > slots[0].0 {
                slots.swap(0, 1);
            }
        }
    }
}

fn insert_bottom(slots: &mut [(f64, usize); 3], item: (f64, usize)) {
    if item.0 < slots[2].0 {
        slots[2] = item;
        if slots[2].0 < slots[1].0 {
            slots.swap(1, 2);
            if slots[1].0 < slots[0].0 {
                slots.swap(0, 1);
            }
        }
    }
}

impl<'m> Evaluator<'m> {
    pub(crate) fn new(model: &'m MilpModel) -> Self {
        let employee_of = model
            .var_index
            .columns()
            .iter()
            .map(|c| match *c {
                Column::Assign { employee, .. } => employee,
                _ => usize::MAX,
            })
            .collect();
        Self {
            model,
            employee_of,
            dev_plus_cost: model.objective[model.var_index.dev_plus()],
            dev_minus_cost: model.objective[model.var_index.dev_minus()],
            min_max: model.options().deviation == DeviationForm::MinMax,
        }
    }

    pub(crate) fn model(&self) -> &'m MilpModel {
        self.model
    }

    fn column(&self, task: usize, choice: usize) -> usize {
        self.model.var_index.task_range(task).start + choice
    }

    fn loads_and_cost(&self, choices: &[usize]) -> (Vec<f64>, f64) {
        let mut loads = vec![0.0; self.model.num_employees()];
        let mut cost = 0.0;
        for (k, &c) in choices.iter().enumerate() {
            let j = self.column(k, c);
            loads[self.employee_of[j]] += self.model.weight(j);
            cost += self.model.objective[j];
        }
        (loads, cost)
    }

    /// `(objective, squared spread around the target)` from summary values.
    fn score(&self, max: f64, min: f64, sum: f64, sum_sq: f64, cost: f64) -> (f64, f64) {
        let t = self.model.target();
        let mut above = (max - t).max(0.0);
        let mut below = (t - min).max(0.0);
        if self.min_max {
            let z = above.max(below);
            above = z;
            below = z;
        }
        let obj = self.dev_plus_cost * above + self.dev_minus_cost * below + cost;
        let n = self.model.num_employees() as f64;
        (obj, sum_sq - 2.0 * t * sum + n * t * t)
    }

    fn score_state(&self, s: &LoadState, cost: f64) -> (f64, f64) {
        self.score(s.top[0].0, s.bottom[0].0, s.sum, s.sum_sq, cost)
    }

    /// Score after employee `a`'s load changes by `da` and `b`'s by `db`.
    fn score_move(&self, s: &LoadState, a: usize, da: f64, b: usize, db: f64, cost: f64) -> (f64, f64) {
        let (wa, wb) = (s.w[a] + da, s.w[b] + db);
        let (max, min) = s.extremes_with(a, wa, b, wb);
        let sum = s.sum + da + db;
        let sum_sq = s.sum_sq - s.w[a] * s.w[a] - s.w[b] * s.w[b] + wa * wa + wb * wb;
        self.score(max, min, sum, sum_sq, cost)
    }

    /// Exact model objective of a complete choice vector.
    pub(crate) fn objective(&self, choices: &[usize]) -> f64 {
        let values = self.model.solution_from_choices(choices);
        self.model.objective_value(&values)
    }

    /// Rounds an LP point: each task goes to its column with the largest
    /// value, ties to the lowest column.
    pub(crate) fn round(&self, values: &[f64]) -> Vec<usize> {
        (0..self.model.var_index.task_count())
            .map(|k| {
                let range = self.model.var_index.task_range(k);
                let mut best = 0;
                let mut best_v = f64::NEG_INFINITY;
                for (c, j) in range.enumerate() {
                    if values[j] > best_v {
                        best_v = values[j];
                        best = c;
                    }
                }
                best
            })
            .collect()
    }

    /// Heaviest tasks first, each to the column that leaves its employee
    /// with the smallest load (plus the column's objective coefficient).
    pub(crate) fn construct(&self) -> Vec<usize> {
        let tasks = self.model.var_index.task_count();
        let mut order: Vec<usize> = (0..tasks).collect();
        let heaviest = |k: usize| {
            self.model
                .var_index
                .task_range(k)
                .map(|j| self.model.weight(j))
                .fold(f64::INFINITY, f64::min)
        };
        order.sort_by(|&a, &b| heaviest(b).total_cmp(&heaviest(a)).then(a.cmp(&b)));
        let mut loads = vec![0.0; self.model.num_employees()];
        let mut choices = vec![0; tasks];
        for k in order {
            let mut best = (f64::INFINITY, 0usize);
            for (c, j) in self.model.var_index.task_range(k).enumerate() {
                let key = loads[self.employee_of[j]] + self.model.weight(j) + self.model.objective[j];
                if key < best.0 {
                    best = (key, c);
                }
            }
            choices[k] = best.1;
            let j = self.column(k, best.1);
            loads[self.employee_of[j]] += self.model.weight(j);
        }
        choices
    }

    /// First-improvement local search on `(objective, squared spread)`
    /// lexicographically. Returns the improved objective.
    pub(crate) fn improve(&self, choices: &mut [usize], max_passes: usize) -> f64 {
        let (loads, mut cost) = self.loads_and_cost(choices);
        let mut state = LoadState::new(loads);
        let mut current = self.score_state(&state, cost);
        let better = |a: (f64, f64), b: (f64, f64)| {
            a.0 < b.0 - 1e-12 || (a.0 <= b.0 && a.1 < b.1 - 1e-9)
        };
        let tasks = choices.len();
        let weight = |j: usize| self.model.weight(j);
        for _ in 0..max_passes {
            let mut improved = false;
            // single moves
            for k in 0..tasks {
                let from = self.column(k, choices[k]);
                let ef = self.employee_of[from];
                for (c, j) in self.model.var_index.task_range(k).enumerate() {
                    if c == choices[k] {
                        continue;
                    }
                    let et = self.employee_of[j];
                    let new_cost = cost - self.model.objective[from] + self.model.objective[j];
                    let s = self.score_move(&state, ef, -weight(from), et, weight(j), new_cost);
                    if better(s, current) {
                        state.w[ef] -= weight(from);
                        state.w[et] += weight(j);
                        state.refresh();
                        choices[k] = c;
                        cost = new_cost;
                        current = s;
                        improved = true;
                        break;
                    }
                }
            }
            // swaps involving the most and least loaded employees
            for a in 0..tasks {
                let ja = self.column(a, choices[a]);
                let ea = self.employee_of[ja];
                if ea != state.top[0].1 && ea != state.bottom[0].1 {
                    continue;
                }
                for b in 0..tasks {
                    if a == b {
                        continue;
                    }
                    let jb = self.column(b, choices[b]);
                    let eb = self.employee_of[jb];
                    if eb == ea {
                        continue;
                    }
                    let (Some(ca), Some(cb)) = (self.offset_of(a, eb), self.offset_of(b, ea)) else {
                        continue;
                    };
                    let na = self.column(a, ca);
                    let nb = self.column(b, cb);
                    let da = weight(nb) - weight(ja);
                    let db = weight(na) - weight(jb);
                    let new_cost = cost - self.model.objective[ja] - self.model.objective[jb]
                        + self.model.objective[na]
                        + self.model.objective[nb];
                    let s = self.score_move(&state, ea, da, eb, db, new_cost);
                    if better(s, current) {
                        state.w[ea] += da;
                        state.w[eb] += db;
                        state.refresh();
                        choices[a] = ca;
                        choices[b] = cb;
                        cost = new_cost;
                        current = s;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                break;
            }
            // resync to avoid drift from incremental updates
            let (l, c) = self.loads_and_cost(choices);
            state = LoadState::new(l);
            cost = c;
            current = self.score_state(&state, cost);
        }
        self.objective(choices)
    }

    /// Iterated local search: perturb a few tasks (half the time one taken
    /// from the most loaded employee), re-polish, keep the result if it is
    /// no worse. Stops early when `stop` returns true. Returns the best
    /// choices seen and their objective.
    pub(crate) fn iterated(
        &self,
        start: &[usize],
        rounds: usize,
        seed: u64,
        stop: &dyn Fn() -> bool,
    ) -> (Vec<usize>, f64) {
        let tasks = start.len();
        let mut current = start.to_vec();
        let mut current_obj = self.improve(&mut current, 50);
        let mut best = current.clone();
        let mut best_obj = current_obj;
        if tasks == 0 {
            return (best, best_obj);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut candidate = current.clone();
        for _ in 0..rounds {
            if stop() {
                break;
            }
            candidate.copy_from_slice(&current);
            let (loads, _) = self.loads_and_cost(&candidate);
            let hi = loads
                .iter()
                .enumerate()
                .fold(0, |h, (i, &w)| if w > loads[h] { i } else { h });
            let kicks = rng.random_range(1..=3usize);
            for kick in 0..kicks {
                let k = if kick == 0 && rng.random_bool(0.5) {
                    let on_hi: Vec<usize> = (0..tasks)
                        .filter(|&k| self.employee_of[self.column(k, candidate[k])] == hi)
                        .collect();
                    if on_hi.is_empty() {
                        rng.random_range(0..tasks)
                    } else {
                        on_hi[rng.random_range(0..on_hi.len())]
                    }
                } else {
                    rng.random_range(0..tasks)
                };
                let width = self.model.var_index.task_range(k).len();
                candidate[k] = rng.random_range(0..width);
            }
            let obj = self.improve(&mut candidate, 50);
            if obj < best_obj - 1e-12 {
                best.copy_from_slice(&candidate);
                best_obj = obj;
            }
            if obj <= current_obj + 1e-12 {
                current.copy_from_slice(&candidate);
                current_obj = obj;
            }
        }
        (best, best_obj)
    }

    fn offset_of(&self, task: usize, employee: usize) -> Option<usize> {
        self.model
            .var_index
            .task_range(task)
            .position(|j| self.employee_of[j] == employee)
    }
}
