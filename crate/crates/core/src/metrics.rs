//! Workload vectors, fairness metrics and the baseline assigners.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{partition_assignable, target_for, Assignment, EmployeeId, ProblemInstance};
use crate::error::{Error, Result};

/// Effective hours per employee, in instance order, zero-load employees
/// included.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadVector {
    pub entries: Vec<(EmployeeId, f64)>,
}

impl WorkloadVector {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, w)| *w).collect()
    }

    pub fn get(&self, id: &EmployeeId) -> Option<f64> {
        self.entries.iter().find(|(e, _)| e == id).map(|(_, w)| *w)
    }
}

/// `W_i = sum of d_t / e_{i,s_t}` over the tasks assigned to each employee.
pub fn workload_vector(assignment: &Assignment, instance: &ProblemInstance) -> Result<WorkloadVector> {
    let employees = instance.employees();
    let mut loads = vec![0.0; employees.len()];
    for (task_id, emp_id) in &assignment.pairs {
        let t = instance
            .task_index(task_id)
            .ok_or_else(|| Error::UnknownTask(task_id.clone()))?;
        let e = instance
            .employee_index(emp_id)
            .ok_or_else(|| Error::UnknownEmployee(emp_id.clone()))?;
        let hours = employees[e]
            .effective_hours(&instance.tasks()[t])
            .ok_or_else(|| Error::Unqualified {
                employee: emp_id.clone(),
                task: task_id.clone(),
            })?;
        loads[e] += hours;
    }
    Ok(WorkloadVector {
        entries: employees
            .iter()
            .map(|e| e.id().clone())
            .zip(loads)
            .collect(),
    })
}

fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("values"));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Population variance (divides by `n`).
pub fn variance(values: &[f64]) -> Result<f64> {
    let m = mean(values)?;
    Ok(values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / values.len() as f64)
}

/// Sample variance (divides by `n - 1`); zero for a single value.
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    let m = mean(values)?;
    if values.len() == 1 {
        return Ok(0.0);
    }
    Ok(values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (values.len() - 1) as f64)
}

/// True when every value is zero, the case where Gini and Jain fall back to
/// their conventional values.
pub fn all_zero(values: &[f64]) -> bool {
    values.iter().all(|&x| x == 0.0)
}

/// Gini coefficient `sum_i sum_j |x_i - x_j| / (2 n^2 mean)`.
///
/// An all-zero vector is reported as 0; see [`all_zero`].
pub fn gini(values: &[f64]) -> Result<f64> {
    let m = mean(values)?;
    if all_zero(values) {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for &a in values {
        for &b in values {
            total += (a - b).abs();
        }
    }
    let n = values.len() as f64;
    Ok(total / (2.0 * n * n * m))
}

/// Jain's index `(sum x)^2 / (n * sum x^2)`.
///
/// An all-zero vector is reported as 1; see [`all_zero`].
pub fn jain(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("values"));
    }
    if all_zero(values) {
        return Ok(1.0);
    }
    let sum: f64 = values.iter().sum();
    let sq: f64 = values.iter().map(|x| x * x).sum();
    Ok(sum * sum / (values.len() as f64 * sq))
}

/// Largest excess over and shortfall below `target`, each at least 0.
pub fn deviation_stats(values: &[f64], target: f64) -> (f64, f64) {
    let above = values.iter().fold(0.0f64, |m, &x| m.max(x - target));
    let below = values.iter().fold(0.0f64, |m, &x| m.max(target - x));
    (above, below)
}

/// Summary of one allocation's workload vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsBlock {
    pub variance: f64,
    pub gini: f64,
    pub jain: f64,
    pub max_above: f64,
    pub max_below: f64,
    /// `max_above + max_below`.
    pub objective: f64,
    /// Set when the workload vector is all zero and Gini/Jain are conventional.
    pub degenerate: bool,
}

impl MetricsBlock {
    pub fn score(values: &[f64], target: f64, sample_variance_flag: bool) -> Result<Self> {
        let variance = if sample_variance_flag {
            sample_variance(values)?
        } else {
            variance(values)?
        };
        let (max_above, max_below) = deviation_stats(values, target);
        Ok(Self {
            variance,
            gini: gini(values)?,
            jain: jain(values)?,
            max_above,
            max_below,
            objective: max_above + max_below,
            degenerate: all_zero(values),
        })
    }

    /// Scores `assignment` against the instance's target workload.
    pub fn for_assignment(
        assignment: &Assignment,
        instance: &ProblemInstance,
        sample_variance_flag: bool,
    ) -> Result<Self> {
        let w = workload_vector(assignment, instance)?;
        let target = target_for(instance, &partition_assignable(instance));
        Self::score(&w.values(), target, sample_variance_flag)
    }
}

/// Each assignable task to a uniformly drawn qualified employee.
pub fn random_assignment(instance: &ProblemInstance, seed: u64) -> Assignment {
    let partition = partition_assignable(instance);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let choices: Vec<usize> = partition
        .qualified
        .iter()
        .map(|q| q[rng.random_range(0..q.len())])
        .collect();
    Assignment::from_choices(instance, &partition, &choices)
}

/// Longest task first, each to the qualified employee with the smallest
/// current effective workload (earliest employee on ties).
pub fn greedy_assignment(instance: &ProblemInstance) -> Assignment {
    let partition = partition_assignable(instance);
    let tasks = instance.tasks();
    let employees = instance.employees();
    let mut order: Vec<usize> = (0..partition.assignable.len()).collect();
    order.sort_by(|&a, &b| {
        let da = tasks[partition.assignable[a]].duration();
        let db = tasks[partition.assignable[b]].duration();
        db.total_cmp(&da)
    });
    let mut loads = vec![0.0; employees.len()];
    let mut choices = vec![0usize; order.len()];
    for k in order {
        let task = &tasks[partition.assignable[k]];
        let mut best = partition.qualified[k][0];
        for &i in &partition.qualified[k][1..] {
            if loads[i] < loads[best] {
                best = i;
            }
        }
        loads[best] += employees[best]
            .effective_hours(task)
            .expect("qualified employees hold the skill");
        choices[k] = best;
    }
    Assignment::from_choices(instance, &partition, &choices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::*;
    use alloc::vec;

    #[test]
    fn hand_values() {
        assert_eq!(variance(&[0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(variance(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 1.25);
        assert_eq!(variance(&[3.0; 4]).unwrap(), 0.0);
        assert!((sample_variance(&[1.0, 2.0, 3.0, 4.0]).unwrap() - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(gini(&[1.0, 0.0]).unwrap(), 0.5);
        assert_eq!(gini(&[10.0, 10.0, 10.0]).unwrap(), 0.0);
        assert_eq!(jain(&[1.0, 0.0]).unwrap(), 0.5);
        assert_eq!(jain(&[5.0; 4]).unwrap(), 1.0);
        assert_eq!(deviation_stats(&[4.0, 6.0], 5.0), (1.0, 1.0));
        assert_eq!(deviation_stats(&[5.0, 5.0], 5.0), (0.0, 0.0));
    }

    #[test]
    fn empty_and_zero_inputs() {
        assert!(variance(&[]).is_err());
        assert!(gini(&[]).is_err());
        assert!(jain(&[]).is_err());
        assert_eq!(gini(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(jain(&[0.0, 0.0]).unwrap(), 1.0);
        let block = MetricsBlock::score(&[0.0, 0.0], 0.0, false).unwrap();
        assert!(block.degenerate);
    }

    #[test]
    fn workload_vector_uses_effective_hours() {
        let inst = ProblemInstance::new(
            vec![
                employee("e1", 3, &[("java", 0.5)]),
                employee("e2", 3, &[("java", 1.0)]),
            ],
            vec![task("t1", "java", 3.0, 1), task("t2", "java", 5.0, 1)],
        )
        .unwrap();
        let p = partition_assignable(&inst);
        let a = Assignment::from_choices(&inst, &p, &[0, 0]);
        let w = workload_vector(&a, &inst).unwrap();
        assert_eq!(w.values(), vec![16.0, 0.0]);
    }

    #[test]
    fn greedy_splits_identical_employees() {
        let inst = ProblemInstance::new(
            vec![
                employee("e1", 3, &[("java", 1.0)]),
                employee("e2", 3, &[("java", 1.0)]),
            ],
            vec![task("t1", "java", 6.0, 1), task("t2", "java", 6.0, 1)],
        )
        .unwrap();
        let a = greedy_assignment(&inst);
        let w = workload_vector(&a, &inst).unwrap();
        assert_eq!(w.values(), vec![6.0, 6.0]);
        assert_eq!(a.pairs.values().next().unwrap().as_str(), "e1");
    }

    #[test]
    fn random_is_seeded() {
        let inst = ProblemInstance::new(
            vec![
                employee("e1", 3, &[("java", 1.0)]),
                employee("e2", 3, &[("java", 1.0), ("go", 1.0)]),
            ],
            (0..20)
                .map(|i| task(&alloc::format!("t{i}"), if i % 2 == 0 { "java" } else { "go" }, 2.0, 1))
                .collect(),
        )
        .unwrap();
        assert_eq!(random_assignment(&inst, 7), random_assignment(&inst, 7));
        let a = random_assignment(&inst, 1);
        for i in (1..20).step_by(2) {
            let id = inst.tasks()[i].id();
            assert_eq!(a.employee_of(id).unwrap().as_str(), "e2");
        }
    }
}
