//! Assignment cost metric and hyperparameter search for the cost-aware model.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};

use crate::bnb::{solve_milp, MilpStatus, SolveConfig};
use crate::domain::{partition_assignable, Employee, EmployeeId, ProblemInstance, SkillId, Task, TaskId};
use crate::error::{Error, Result};
use crate::model::{build_cost_model_with, column_costs_for, ModelOptions};

/// Cost of every (qualified employee, assignable task) pair.
pub type CostTable = BTreeMap<(EmployeeId, TaskId), f64>;

/// Weights of the cost-aware objective: `lambda` trades balance against cost,
/// `alpha`, `beta`, `gamma` weight the duration, mismatch and
/// complexity-over-performance terms of the cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            alpha: 1.0 / 3.0,
            beta: 1.0 / 3.0,
            gamma: 1.0 / 3.0,
        }
    }
}

impl Hyperparams {
    /// Weights with `alpha + beta + gamma = 1` (within `1e-9`).
    pub fn new(lambda: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let hp = Self::unnormalized(lambda, alpha, beta, gamma)?;
        let sum = alpha + beta + gamma;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidHyperparams(format!(
                "alpha + beta + gamma = {sum}, expected 1"
            )));
        }
        Ok(hp)
    }

    /// Weights without the simplex constraint on `(alpha, beta, gamma)`.
    pub fn unnormalized(lambda: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidHyperparams(format!(
                "lambda = {lambda} outside [0, 1]"
            )));
        }
        for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidHyperparams(format!("{name} = {v} must be >= 0")));
            }
        }
        Ok(Self {
            lambda,
            alpha,
            beta,
            gamma,
        })
    }

    fn lexicographic(&self, other: &Self) -> Ordering {
        self.lambda
            .total_cmp(&other.lambda)
            .then(self.alpha.total_cmp(&other.alpha))
            .then(self.beta.total_cmp(&other.beta))
            .then(self.gamma.total_cmp(&other.gamma))
    }
}

/// Fraction of the required skills the employee lacks:
/// `1 - |held ∩ required| / |required|`.
pub fn skill_mismatch_for(employee: &Employee, required: &[SkillId]) -> f64 {
    if required.is_empty() {
        return 0.0;
    }
    let held = required.iter().filter(|s| employee.has_skill(s)).count();
    1.0 - held as f64 / required.len() as f64
}

/// Mismatch penalty for a single-skill task: 0 if held, 1 otherwise.
pub fn skill_mismatch(employee: &Employee, task: &Task) -> f64 {
    skill_mismatch_for(employee, core::slice::from_ref(task.required_skill()))
}

/// `alpha * d / e + beta * mismatch + gamma * complexity / performance`.
///
/// Only defined for qualified employees; the efficiency on the required
/// skill is needed for the first term.
pub fn assignment_cost(employee: &Employee, task: &Task, hp: &Hyperparams) -> Result<f64> {
    let hours = employee
        .effective_hours(task)
        .ok_or_else(|| Error::Unqualified {
            employee: employee.id().clone(),
            task: task.id().clone(),
        })?;
    let mismatch = skill_mismatch(employee, task);
    let complexity = f64::from(task.complexity()) / f64::from(employee.performance());
    Ok(hp.alpha * hours + hp.beta * mismatch + hp.gamma * complexity)
}

/// Costs for every qualified pair over the assignable tasks.
pub fn cost_table(instance: &ProblemInstance, hp: &Hyperparams) -> Result<CostTable> {
    let partition = partition_assignable(instance);
    let mut table = CostTable::new();
    for (k, &t) in partition.assignable.iter().enumerate() {
        let task = &instance.tasks()[t];
        for &i in &partition.qualified[k] {
            let e = &instance.employees()[i];
            table.insert(
                (e.id().clone(), task.id().clone()),
                assignment_cost(e, task, hp)?,
            );
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchStrategy {
    #[default]
    Grid,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneConfig {
    pub strategy: SearchStrategy,
    /// Number of hyperparameter points to evaluate.
    pub budget: usize,
    pub seed: u64,
    /// How many ranked entries to keep.
    pub top_k: usize,
    /// Uniform grid points for lambda on `[0, 1]`.
    pub lambda_points: usize,
    /// Lattice divisions for `(alpha, beta, gamma)`; 6 gives step 1/6.
    pub weight_divisions: usize,
    /// Restrict `(alpha, beta, gamma)` to the unit simplex.
    pub normalize: bool,
    pub model: ModelOptions,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            strategy: SearchStrategy::Grid,
            budget: 50,
            seed: 0,
            top_k: 10,
            lambda_points: 11,
            weight_divisions: 6,
            normalize: true,
            model: ModelOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningEntry {
    pub hyperparams: Hyperparams,
    pub objective: f64,
    pub dev_above: f64,
    pub dev_below: f64,
    /// Sum of unweighted assignment costs of the chosen pairs.
    pub total_cost: f64,
}

/// Evaluated points ranked by objective, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningResult {
    pub entries: Vec<TuningEntry>,
    pub failures: Vec<(Hyperparams, Error)>,
    pub evaluated: usize,
}

/// Grid candidates in evaluation order. The default point
/// `(0.5, 1/3, 1/3, 1/3)` comes first when it lies on the grid.
pub fn grid_points(cfg: &TuneConfig) -> Vec<Hyperparams> {
    let lp = cfg.lambda_points.max(1);
    let d = cfg.weight_divisions.max(1);
    let lambdas: Vec<f64> = if lp == 1 {
        alloc::vec![0.5]
    } else {
        (0..lp).map(|k| k as f64 / (lp - 1) as f64).collect()
    };
    let mut weights = Vec::new();
    for i in 0..=d {
        for j in 0..=d {
            if cfg.normalize {
                if i + j > d {
                    continue;
                }
                let k = d - i - j;
                weights.push((i as f64 / d as f64, j as f64 / d as f64, k as f64 / d as f64));
            } else {
                for k in 0..=d {
                    weights.push((i as f64 / d as f64, j as f64 / d as f64, k as f64 / d as f64));
                }
            }
        }
    }
    let initial = Hyperparams::default();
    let is_initial = |hp: &Hyperparams| {
        (hp.lambda - initial.lambda).abs() < 1e-12
            && (hp.alpha - initial.alpha).abs() < 1e-12
            && (hp.beta - initial.beta).abs() < 1e-12
            && (hp.gamma - initial.gamma).abs() < 1e-12
    };
    let mut points = Vec::with_capacity(lambdas.len() * weights.len() + 1);
    let mut rest = Vec::with_capacity(lambdas.len() * weights.len());
    for &lambda in &lambdas {
        for &(alpha, beta, gamma) in &weights {
            let hp = Hyperparams {
                lambda,
                alpha,
                beta,
                gamma,
            };
            if is_initial(&hp) {
                points.push(initial);
            } else {
                rest.push(hp);
            }
        }
    }
    points.extend(rest);
    points
}

/// Seeded random candidates: `lambda ~ U[0, 1)`, weights from a flat
/// Dirichlet (or independent `U[0, 1)` when not normalized).
pub fn random_points(cfg: &TuneConfig) -> Vec<Hyperparams> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dirichlet = Dirichlet::new([1.0f64; 3]).expect("flat Dirichlet parameters are valid");
    (0..cfg.budget)
        .map(|_| {
            let lambda: f64 = rng.random();
            let [alpha, beta, gamma] = if cfg.normalize {
                dirichlet.sample(&mut rng)
            } else {
                [rng.random(), rng.random(), rng.random()]
            };
            Hyperparams {
                lambda,
                alpha,
                beta,
                gamma,
            }
        })
        .collect()
}

/// Solves the cost-aware model at each candidate point and ranks the results.
pub fn tune_hyperparams(
    instance: &ProblemInstance,
    cfg: &TuneConfig,
    solve_cfg: &SolveConfig,
) -> Result<TuningResult> {
    if cfg.budget == 0 {
        return Err(Error::InvalidConfig("tuning budget must be at least 1".into()));
    }
    let mut points = match cfg.strategy {
        SearchStrategy::Grid => grid_points(cfg),
        SearchStrategy::Random => random_points(cfg),
    };
    points.truncate(cfg.budget);

    // Constraint rows only depend on the hyperparameters when the fairness
    // rows are built on cost.
    let template = if cfg.model.fairness_on_cost {
        None
    } else {
        let hp = points[0];
        Some(build_cost_model_with(instance, &hp, &cost_table(instance, &hp)?, cfg.model)?)
    };

    let mut entries = Vec::with_capacity(points.len());
    let mut failures = Vec::new();
    for hp in &points {
        match evaluate_point(instance, hp, cfg, template.as_ref(), solve_cfg) {
            Ok(entry) => entries.push(entry),
            Err(e) => failures.push((*hp, e)),
        }
    }
    let evaluated = points.len();
    rank(&mut entries);
    entries.truncate(cfg.top_k.max(1));
    Ok(TuningResult {
        entries,
        failures,
        evaluated,
    })
}

pub(crate) fn rank(entries: &mut [TuningEntry]) {
    entries.sort_by(|a, b| {
        a.objective
            .total_cmp(&b.objective)
            .then_with(|| a.hyperparams.lexicographic(&b.hyperparams))
    });
}

/// Solves the cost-aware model at one point.
pub fn evaluate_point(
    instance: &ProblemInstance,
    hp: &Hyperparams,
    cfg: &TuneConfig,
    template: Option<&crate::model::MilpModel>,
    solve_cfg: &SolveConfig,
) -> Result<TuningEntry> {
    let costs = cost_table(instance, hp)?;
    let model = match template {
        Some(t) => {
            let column_costs = column_costs_for(t, instance, &costs)?;
            t.reweighted(hp.lambda, &column_costs)
        }
        None => build_cost_model_with(instance, hp, &costs, cfg.model)?,
    };
    let result = solve_milp(&model, solve_cfg);
    if matches!(result.status, MilpStatus::Infeasible) || result.solution.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no feasible allocation at lambda={} alpha={} beta={} gamma={}",
            hp.lambda, hp.alpha, hp.beta, hp.gamma
        )));
    }
    let column_costs = column_costs_for(&model, instance, &costs)?;
    let total_cost = result
        .solution
        .iter()
        .zip(&column_costs)
        .filter(|(v, _)| **v > 0.5)
        .map(|(_, c)| c)
        .sum();
    Ok(TuningEntry {
        hyperparams: *hp,
        objective: result.objective,
        dev_above: result.solution[model.var_index.dev_plus()],
        dev_below: result.solution[model.var_index.dev_minus()],
        total_cost,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sensitivity {
    Low,
    Medium,
    High,
}

impl Sensitivity {
    /// Buckets a parameter's spread across the top entries.
    pub fn from_range(range: f64) -> Self {
        if range < 0.05 {
            Sensitivity::Low
        } else if range < 0.5 {
            Sensitivity::Medium
        } else {
            Sensitivity::High
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sensitivity::Low => "low",
            Sensitivity::Medium => "medium",
            Sensitivity::High => "high",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamRange {
    pub name: &'static str,
    pub min: f64,
    pub max: f64,
    pub range: f64,
    pub sensitivity: Sensitivity,
}

/// Per-parameter min, max and spread across the ranked entries.
pub fn sensitivity_report(result: &TuningResult) -> Result<Vec<ParamRange>> {
    if result.entries.is_empty() {
        return Err(Error::EmptyInput("sensitivity report"));
    }
    type Getter = fn(&Hyperparams) -> f64;
    let getters: [(&'static str, Getter); 4] = [
        ("lambda", |h| h.lambda),
        ("alpha", |h| h.alpha),
        ("beta", |h| h.beta),
        ("gamma", |h| h.gamma),
    ];
    Ok(getters
        .iter()
        .map(|&(name, get)| {
            let (min, max) = result.entries.iter().map(|e| get(&e.hyperparams)).fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), v| (lo.min(v), hi.max(v)),
            );
            let range = max - min;
            ParamRange {
                name,
                min,
                max,
                range,
                sensitivity: Sensitivity::from_range(range),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::*;
    use alloc::vec;

    #[test]
    fn hyperparam_validation() {
        assert!(Hyperparams::new(0.5, 0.2, 0.3, 0.5).is_ok());
        assert!(Hyperparams::new(0.5, 0.2, 0.3, 0.6).is_err());
        assert!(Hyperparams::new(1.5, 0.2, 0.3, 0.5).is_err());
        assert!(Hyperparams::unnormalized(0.5, 2.0, 3.0, 0.0).is_ok());
        assert!(Hyperparams::unnormalized(0.5, -1.0, 0.0, 0.0).is_err());
        let d = Hyperparams::default();
        assert!((d.alpha + d.beta + d.gamma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatch_values() {
        let e = employee("e", 3, &[("java", 1.0), ("sql", 1.0)]);
        assert_eq!(skill_mismatch(&e, &task("t", "java", 1.0, 1)), 0.0);
        assert_eq!(skill_mismatch(&e, &task("t", "go", 1.0, 1)), 1.0);
        assert_eq!(skill_mismatch_for(&e, &[sid("java"), sid("go")]), 0.5);
    }

    #[test]
    fn cost_formula() {
        let e = employee("e", 3, &[("java", 0.5)]);
        let t = task("t", "java", 6.0, 3);
        let c = assignment_cost(&e, &t, &Hyperparams::default()).unwrap();
        assert!((c - (4.0 + 1.0 / 3.0)).abs() < 1e-12);

        let hp = Hyperparams::new(0.5, 1.0, 0.0, 0.0).unwrap();
        let e1 = employee("e", 3, &[("java", 1.0)]);
        assert_eq!(assignment_cost(&e1, &t, &hp).unwrap(), 6.0);

        let hp = Hyperparams::new(0.5, 0.0, 0.0, 1.0).unwrap();
        let weak = employee("w", 1, &[("java", 1.0)]);
        let strong = employee("s", 5, &[("java", 1.0)]);
        assert_eq!(assignment_cost(&weak, &t, &hp).unwrap(), 3.0);
        assert!((assignment_cost(&strong, &t, &hp).unwrap() - 0.6).abs() < 1e-12);

        let other = employee("o", 3, &[("sql", 1.0)]);
        assert!(matches!(
            assignment_cost(&other, &t, &hp),
            Err(Error::Unqualified { .. })
        ));
    }

    #[test]
    fn grid_starts_at_default_point() {
        let cfg = TuneConfig::default();
        let pts = grid_points(&cfg);
        assert_eq!(pts[0], Hyperparams::default());
        assert_eq!(pts.len(), 11 * 28);
        assert!(pts
            .iter()
            .all(|h| (h.alpha + h.beta + h.gamma - 1.0).abs() < 1e-9));
        let unnorm = grid_points(&TuneConfig {
            normalize: false,
            ..cfg
        });
        assert_eq!(unnorm.len(), 11 * 343);
    }

    #[test]
    fn random_points_are_seeded_and_on_simplex() {
        let cfg = TuneConfig {
            strategy: SearchStrategy::Random,
            budget: 20,
            seed: 7,
            ..Default::default()
        };
        let a = random_points(&cfg);
        assert_eq!(a, random_points(&cfg));
        assert_eq!(a.len(), 20);
        for h in &a {
            assert!((0.0..1.0).contains(&h.lambda));
            assert!((h.alpha + h.beta + h.gamma - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ties_rank_lexicographically() {
        let mk = |lambda, alpha| TuningEntry {
            hyperparams: Hyperparams {
                lambda,
                alpha,
                beta: 0.0,
                gamma: 1.0 - alpha,
            },
            objective: 3.0,
            dev_above: 0.0,
            dev_below: 0.0,
            total_cost: 0.0,
        };
        let mut v = vec![mk(0.7, 0.1), mk(0.2, 0.5), mk(0.2, 0.3)];
        v[0].objective = 1.0;
        rank(&mut v);
        assert_eq!(v[0].hyperparams.lambda, 0.7);
        assert_eq!(v[1].hyperparams.alpha, 0.3);
        assert_eq!(v[2].hyperparams.alpha, 0.5);
    }

    #[test]
    fn sensitivity_ranges() {
        let mk = |lambda, alpha| TuningEntry {
            hyperparams: Hyperparams {
                lambda,
                alpha,
                beta: 0.5 - alpha / 2.0,
                gamma: 0.5 - alpha / 2.0,
            },
            objective: 1.0,
            dev_above: 0.0,
            dev_below: 0.0,
            total_cost: 0.0,
        };
        let result = TuningResult {
            entries: vec![mk(0.999_99, 0.1), mk(0.999_98, 0.2), mk(0.999_97, 0.3)],
            failures: vec![],
            evaluated: 3,
        };
        let rep = sensitivity_report(&result).unwrap();
        assert_eq!(rep[0].name, "lambda");
        assert!(rep[0].range < 1e-4);
        assert_eq!(rep[0].sensitivity, Sensitivity::Low);
        assert!((rep[1].range - 0.2).abs() < 1e-12);
        assert_eq!(rep[1].sensitivity, Sensitivity::Medium);

        let single = TuningResult {
            entries: vec![mk(0.5, 0.1)],
            failures: vec![],
            evaluated: 1,
        };
        assert!(sensitivity_report(&single)
            .unwrap()
            .iter()
            .all(|p| p.range == 0.0));
        let empty = TuningResult {
            entries: vec![],
            failures: vec![],
            evaluated: 0,
        };
        assert!(sensitivity_report(&empty).is_err());
    }
}
