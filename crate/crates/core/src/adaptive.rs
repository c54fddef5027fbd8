//! Adaptive re-estimation loop: solve, observe completion times, update
//! efficiencies, drop inefficient employees, repeat.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bnb::{solve_milp, MilpStatus, SolveConfig};
use crate::cost::{cost_table, Hyperparams};
use crate::domain::{Assignment, Employee, EmployeeId, ProblemInstance, SkillId, Task, TaskId};
use crate::error::{Error, Result};
use crate::model::{build_balance_model_with, build_cost_model_with, extract_assignment, ModelOptions};

/// Efficiency implied by one observation: `min(1, nominal / actual)`.
pub fn update_efficiency(nominal: f64, actual: f64) -> Result<f64> {
    if !(nominal > 0.0 && actual > 0.0 && nominal.is_finite() && actual.is_finite()) {
        return Err(Error::NonPositiveTime { nominal, actual });
    }
    Ok((nominal / actual).min(1.0))
}

/// Which efficiencies must clear the threshold for an employee to stay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterRule {
    /// Every skill.
    Any,
    /// The best skill.
    #[default]
    Max,
    /// The mean over skills.
    Mean,
}

impl FilterRule {
    fn keeps(self, employee: &Employee, threshold: f64) -> bool {
        let effs = employee.efficiencies().values().copied();
        match self {
            FilterRule::Any => effs.into_iter().all(|e| e > threshold),
            FilterRule::Max => effs.into_iter().fold(f64::NEG_INFINITY, f64::max) > threshold,
            FilterRule::Mean => {
                let n = employee.efficiencies().len() as f64;
                effs.sum::<f64>() / n > threshold
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<Employee>,
    pub removed: Vec<EmployeeId>,
    /// Filtering would have left fewer than the minimum, so nothing was removed.
    pub guard_triggered: bool,
}

/// Keeps employees passing `rule` at `threshold`, unless fewer than
/// `min_employees` would remain, in which case the input is returned as is.
pub fn filter_employees(
    employees: &[Employee],
    threshold: f64,
    min_employees: usize,
    rule: FilterRule,
) -> FilterOutcome {
    let (kept, dropped): (Vec<&Employee>, Vec<&Employee>) =
        employees.iter().partition(|e| rule.keeps(e, threshold));
    if kept.len() < min_employees {
        return FilterOutcome {
            kept: employees.to_vec(),
            removed: Vec::new(),
            guard_triggered: true,
        };
    }
    FilterOutcome {
        kept: kept.into_iter().cloned().collect(),
        removed: dropped.into_iter().map(|e| e.id().clone()).collect(),
        guard_triggered: false,
    }
}

/// Source of actual completion times.
pub trait ObservationSource {
    /// Hours `employee` actually took for `task` in `iteration` (1-based).
    fn measure(&mut self, iteration: usize, employee: &EmployeeId, task: &Task) -> Result<f64>;
}

/// Completion times drawn as `d / e_true * exp(sigma * z)`, `z` standard
/// normal from a seeded stream.
#[derive(Debug, Clone)]
pub struct SimulatedWorkforce {
    true_efficiency: BTreeMap<(EmployeeId, SkillId), f64>,
    noise_sigma: f64,
    rng: ChaCha8Rng,
}

impl SimulatedWorkforce {
    pub fn new(
        true_efficiency: BTreeMap<(EmployeeId, SkillId), f64>,
        noise_sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise sigma {noise_sigma} must be finite and >= 0"
            )));
        }
        for ((employee, skill), &v) in &true_efficiency {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::EfficiencyOutOfRange {
                    employee: employee.clone(),
                    skill: skill.clone(),
                    value: v,
                    range: "(0, 1]",
                });
            }
        }
        Ok(Self {
            true_efficiency,
            noise_sigma,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Uses the instance's own efficiencies as the truth.
    pub fn from_instance(instance: &ProblemInstance, noise_sigma: f64, seed: u64) -> Result<Self> {
        let truth = instance
            .employees()
            .iter()
            .flat_map(|e| {
                e.efficiencies()
                    .iter()
                    .map(|(s, &v)| ((e.id().clone(), s.clone()), v))
            })
            .collect();
        Self::new(truth, noise_sigma, seed)
    }

    pub fn true_efficiency(&self, employee: &EmployeeId, skill: &SkillId) -> Option<f64> {
        self.true_efficiency
            .get(&(employee.clone(), skill.clone()))
            .copied()
    }
}

impl ObservationSource for SimulatedWorkforce {
    fn measure(&mut self, _iteration: usize, employee: &EmployeeId, task: &Task) -> Result<f64> {
        let e = self
            .true_efficiency(employee, task.required_skill())
            .ok_or_else(|| Error::MissingTrueEfficiency {
                employee: employee.clone(),
                skill: task.required_skill().clone(),
            })?;
        let z: f64 = StandardNormal.sample(&mut self.rng);
        Ok(task.duration() / e * libm::exp(self.noise_sigma * z))
    }
}

/// Pre-recorded completion times keyed by `(iteration, employee, task)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordedObservations {
    entries: BTreeMap<(usize, EmployeeId, TaskId), f64>,
}

impl RecordedObservations {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one record; later duplicates replace earlier ones.
    pub fn insert(&mut self, iteration: usize, employee: EmployeeId, task: TaskId, actual: f64) {
        self.entries.insert((iteration, employee, task), actual);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl ObservationSource for RecordedObservations {
    fn measure(&mut self, iteration: usize, employee: &EmployeeId, task: &Task) -> Result<f64> {
        let key = (iteration, employee.clone(), task.id().clone());
        let value = *self
            .entries
            .get(&key)
            .ok_or_else(|| Error::MissingObservation {
                iteration,
                employee: employee.clone(),
                task: task.id().clone(),
            })?;
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidObservation {
                employee: employee.clone(),
                task: task.id().clone(),
                value,
            });
        }
        Ok(value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AllocationMode {
    Balance,
    Cost(Hyperparams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub max_iterations: usize,
    pub threshold: f64,
    /// Defaults to the number of distinct required skills in the task set.
    pub min_employees: Option<usize>,
    pub mode: AllocationMode,
    pub filter: FilterRule,
    /// Start every efficiency at 1 instead of the loaded values.
    pub reset_efficiency: bool,
    /// Weight of the newest observation in an exponential moving average;
    /// `None` replaces the estimate outright.
    pub smoothing: Option<f64>,
    pub solve: SolveConfig,
    pub model: ModelOptions,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            max_iterations: 5,
            threshold: 0.1,
            min_employees: None,
            mode: AllocationMode::Balance,
            filter: FilterRule::Max,
            reset_efficiency: false,
            smoothing: None,
            solve: SolveConfig::default(),
            model: ModelOptions::default(),
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max iterations must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold {} must lie in [0, 1)",
                self.threshold
            )));
        }
        if self.min_employees == Some(0) {
            return Err(Error::InvalidConfig("min employees must be >= 1".into()));
        }
        if let Some(w) = self.smoothing {
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "smoothing weight {w} must lie in (0, 1]"
                )));
            }
        }
        self.solve.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub employee: EmployeeId,
    pub task: TaskId,
    pub skill: SkillId,
    pub nominal: f64,
    pub actual: f64,
    /// Estimate stored after this observation.
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    /// Employees the model was solved over.
    pub employees: Vec<EmployeeId>,
    pub assignment: Assignment,
    pub observations: Vec<Observation>,
    /// Estimates of every employee in this iteration after the updates.
    pub efficiencies: BTreeMap<EmployeeId, BTreeMap<SkillId, f64>>,
    pub survivors: Vec<EmployeeId>,
    pub removed: Vec<EmployeeId>,
    pub guard_triggered: bool,
    pub status: MilpStatus,
    pub objective: f64,
    pub best_bound: f64,
    pub gap_percent: f64,
    pub nodes: u64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveTrace {
    pub iterations: Vec<IterationRecord>,
    pub min_employees: usize,
    /// Final estimates for every employee of the input instance, including
    /// those filtered out along the way.
    pub final_efficiencies: Vec<(EmployeeId, SkillId, f64)>,
    pub stopped_by_guard: bool,
}

/// Runs the loop until `max_iterations` or until the filter guard fires.
///
/// Each iteration solves over the current employees, measures every assigned
/// pair once, updates that employee's efficiency for the task's skill, then
/// filters. When the filter would leave fewer than `min_employees`, the
/// employee set is kept unchanged and the loop stops.
pub fn run_adaptive(
    instance: &ProblemInstance,
    source: &mut dyn ObservationSource,
    cfg: &AdaptiveConfig,
) -> Result<AdaptiveTrace> {
    cfg.validate()?;
    let min_employees = cfg
        .min_employees
        .unwrap_or_else(|| instance.required_skills().len().max(1));
    let mut all: Vec<Employee> = instance.employees().to_vec();
    if cfg.reset_efficiency {
        for e in &mut all {
            let skills: Vec<SkillId> = e.skills().cloned().collect();
            for s in skills {
                e.set_efficiency(&s, 1.0)?;
            }
        }
    }
    let mut active: Vec<EmployeeId> = all.iter().map(|e| e.id().clone()).collect();
    let mut iterations = Vec::new();
    let mut stopped_by_guard = false;

    for iteration in 1..=cfg.max_iterations {
        let current: Vec<Employee> = all
            .iter()
            .filter(|e| active.contains(e.id()))
            .cloned()
            .collect();
        let sub = ProblemInstance::new(current, instance.tasks().to_vec())?;
        let model = match cfg.mode {
            AllocationMode::Balance => build_balance_model_with(&sub, cfg.model),
            AllocationMode::Cost(hp) => {
                let costs = cost_table(&sub, &hp)?;
                build_cost_model_with(&sub, &hp, &costs, cfg.model)?
            }
        };
        let result = solve_milp(&model, &cfg.solve);
        if result.status == MilpStatus::Infeasible || result.solution.is_empty() {
            return Err(Error::InfeasibleIteration { iteration });
        }
        let assignment = extract_assignment(&model, &result.solution)?;
        log::debug!(
            "iteration {iteration}: objective {} over {} employees",
            result.objective,
            active.len()
        );

        let mut observations = Vec::new();
        for task in instance.tasks() {
            let Some(emp_id) = assignment.employee_of(task.id()) else {
                continue;
            };
            let actual = source.measure(iteration, emp_id, task)?;
            let observed = update_efficiency(task.duration(), actual)?;
            let employee = all
                .iter_mut()
                .find(|e| e.id() == emp_id)
                .expect("assigned employees come from the instance");
            let skill = task.required_skill();
            let estimate = match cfg.smoothing {
                None => observed,
                Some(w) => {
                    let old = employee.efficiency(skill).expect("qualified");
                    w * observed + (1.0 - w) * old
                }
            };
            employee.set_efficiency(skill, estimate)?;
            observations.push(Observation {
                employee: emp_id.clone(),
                task: task.id().clone(),
                skill: skill.clone(),
                nominal: task.duration(),
                actual,
                efficiency: estimate,
            });
        }

        let current: Vec<Employee> = all
            .iter()
            .filter(|e| active.contains(e.id()))
            .cloned()
            .collect();
        let outcome = filter_employees(&current, cfg.threshold, min_employees, cfg.filter);
        let record = IterationRecord {
            iteration,
            employees: active.clone(),
            assignment,
            observations,
            efficiencies: current
                .iter()
                .map(|e| (e.id().clone(), e.efficiencies().clone()))
                .collect(),
            survivors: outcome.kept.iter().map(|e| e.id().clone()).collect(),
            removed: outcome.removed.clone(),
            guard_triggered: outcome.guard_triggered,
            status: result.status,
            objective: result.objective,
            best_bound: result.best_bound,
            gap_percent: result.gap.percent,
            nodes: result.nodes,
            wall_time: result.wall_time,
        };
        active = record.survivors.clone();
        iterations.push(record);
        if outcome.guard_triggered {
            log::debug!("iteration {iteration}: filter guard fired, stopping");
            stopped_by_guard = true;
            break;
        }
    }

    let final_efficiencies = all
        .iter()
        .flat_map(|e| {
            e.efficiencies()
                .iter()
                .map(|(s, &v)| (e.id().clone(), s.clone(), v))
        })
        .collect();
    Ok(AdaptiveTrace {
        iterations,
        min_employees,
        final_efficiencies,
        stopped_by_guard,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::*;
    use alloc::vec;

    fn eid(s: &str) -> EmployeeId {
        EmployeeId::new(s).unwrap()
    }

    #[test]
    fn update_rule() {
        assert_eq!(update_efficiency(4.0, 8.0).unwrap(), 0.5);
        assert_eq!(update_efficiency(4.0, 2.0).unwrap(), 1.0);
        assert_eq!(update_efficiency(4.0, 4.0).unwrap(), 1.0);
        assert!(update_efficiency(0.0, 4.0).is_err());
        assert!(update_efficiency(4.0, -1.0).is_err());
    }

    #[test]
    fn filter_rules() {
        let staff = vec![
            employee("e1", 3, &[("java", 0.05)]),
            employee("e2", 3, &[("java", 0.9)]),
            employee("e3", 3, &[("java", 0.05), ("sql", 0.5)]),
        ];
        let max = filter_employees(&staff, 0.1, 1, FilterRule::Max);
        assert_eq!(max.kept.len(), 2);
        assert_eq!(max.removed, vec![eid("e1")]);
        let any = filter_employees(&staff, 0.1, 1, FilterRule::Any);
        assert_eq!(any.removed, vec![eid("e1"), eid("e3")]);
        let mean = filter_employees(&staff, 0.3, 1, FilterRule::Mean);
        assert_eq!(mean.removed, vec![eid("e1"), eid("e3")]);
        let all = filter_employees(&staff, 0.01, 1, FilterRule::Max);
        assert_eq!(all.kept, staff);
        assert!(!all.guard_triggered);
    }

    #[test]
    fn filter_guard_returns_input() {
        let staff = vec![employee("e1", 3, &[("java", 0.05)])];
        let out = filter_employees(&staff, 0.1, 1, FilterRule::Max);
        assert!(out.guard_triggered);
        assert_eq!(out.kept, staff);
        assert!(out.removed.is_empty());
    }

    #[test]
    fn recorded_source_reports_missing_pairs() {
        let mut obs = RecordedObservations::new();
        obs.insert(1, eid("e1"), "t1".parse().unwrap(), 8.0);
        let t1 = task("t1", "java", 4.0, 1);
        let t2 = task("t2", "java", 4.0, 1);
        assert_eq!(obs.measure(1, &eid("e1"), &t1).unwrap(), 8.0);
        assert!(matches!(
            obs.measure(2, &eid("e1"), &t1),
            Err(Error::MissingObservation { iteration: 2, .. })
        ));
        assert!(obs.measure(1, &eid("e1"), &t2).is_err());
    }

    #[test]
    fn single_iteration_trace() {
        let inst = ProblemInstance::new(
            vec![
                employee("e1", 3, &[("java", 1.0)]),
                employee("e2", 3, &[("java", 1.0)]),
            ],
            vec![task("t1", "java", 6.0, 1), task("t2", "java", 6.0, 1)],
        )
        .unwrap();
        let mut truth = BTreeMap::new();
        truth.insert((eid("e1"), sid("java")), 0.5);
        truth.insert((eid("e2"), sid("java")), 0.8);
        let mut sim = SimulatedWorkforce::new(truth, 0.0, 3).unwrap();
        let cfg = AdaptiveConfig {
            max_iterations: 1,
            ..Default::default()
        };
        let trace = run_adaptive(&inst, &mut sim, &cfg).unwrap();
        assert_eq!(trace.iterations.len(), 1);
        let rec = &trace.iterations[0];
        assert_eq!(rec.observations.len(), 2);
        for o in &rec.observations {
            let want = if o.employee == eid("e1") { 0.5 } else { 0.8 };
            assert!((o.efficiency - want).abs() < 1e-12);
        }
    }

    #[test]
    fn inefficient_employee_is_dropped() {
        let inst = ProblemInstance::new(
            vec![
                employee("e1", 3, &[("java", 1.0)]),
                employee("e2", 3, &[("java", 1.0)]),
                employee("e3", 3, &[("java", 1.0)]),
            ],
            vec![
                task("t1", "java", 4.0, 1),
                task("t2", "java", 4.0, 1),
                task("t3", "java", 4.0, 1),
            ],
        )
        .unwrap();
        let mut truth = BTreeMap::new();
        truth.insert((eid("e1"), sid("java")), 0.9);
        truth.insert((eid("e2"), sid("java")), 0.05);
        truth.insert((eid("e3"), sid("java")), 0.8);
        let mut sim = SimulatedWorkforce::new(truth, 0.0, 0).unwrap();
        let cfg = AdaptiveConfig {
            max_iterations: 2,
            min_employees: Some(1),
            ..Default::default()
        };
        let trace = run_adaptive(&inst, &mut sim, &cfg).unwrap();
        assert_eq!(trace.iterations.len(), 2);
        assert_eq!(trace.iterations[0].removed, vec![eid("e2")]);
        let second = &trace.iterations[1];
        assert!(!second.employees.contains(&eid("e2")));
        assert!(second.assignment.pairs.values().all(|e| *e != eid("e2")));
    }

    #[test]
    fn guard_stops_the_loop() {
        let inst = ProblemInstance::new(
            vec![employee("e1", 3, &[("java", 1.0)])],
            vec![task("t1", "java", 4.0, 1)],
        )
        .unwrap();
        let mut truth = BTreeMap::new();
        truth.insert((eid("e1"), sid("java")), 0.05);
        let mut sim = SimulatedWorkforce::new(truth, 0.0, 0).unwrap();
        let cfg = AdaptiveConfig {
            max_iterations: 4,
            ..Default::default()
        };
        let trace = run_adaptive(&inst, &mut sim, &cfg).unwrap();
        assert!(trace.stopped_by_guard);
        assert_eq!(trace.iterations.len(), 1);
        assert!(trace.iterations[0].guard_triggered);
        assert_eq!(trace.iterations[0].survivors, vec![eid("e1")]);
    }

    #[test]
    fn reset_starts_from_one() {
        let inst = ProblemInstance::new(
            vec![employee("e1", 3, &[("java", 0.5), ("sql", 0.4)])],
            vec![task("t1", "java", 4.0, 1)],
        )
        .unwrap();
        let mut sim = SimulatedWorkforce::from_instance(&inst, 0.0, 0).unwrap();
        let cfg = AdaptiveConfig {
            max_iterations: 1,
            reset_efficiency: true,
            ..Default::default()
        };
        let trace = run_adaptive(&inst, &mut sim, &cfg).unwrap();
        let effs = &trace.iterations[0].efficiencies[&eid("e1")];
        assert_eq!(effs[&sid("sql")], 1.0);
        assert!((effs[&sid("java")] - 0.5).abs() < 1e-12);
    }
}
