//! Exhaustive enumeration for small instances.
//!
//! The objective is evaluated straight from the instance data (effective
//! hours, target, per-pair costs) without going through [`crate::model`], so
//! it can serve as an independent check on the model builder and solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::bnb::{Gap, MilpResult, MilpStatus};
use crate::cost::{assignment_cost, Hyperparams};
use crate::domain::{partition_assignable, target_for, Assignment, ProblemInstance};
use crate::error::{Error, Result};

/// Largest assignment space the enumerator accepts.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

/// Which objective to enumerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleMode {
    /// `D+ + D-`.
    Balance,
    /// `lambda * (D+ + D-) + (1 - lambda) * total cost`.
    Cost(Hyperparams),
}

/// Enumerates every feasible assignment and returns the best one.
///
/// Ties keep the first assignment in enumeration order, which is the
/// lexicographically smallest vector of per-task choice positions (tasks in
/// input order, qualified employees in input order).
pub fn brute_force(instance: &ProblemInstance, mode: OracleMode) -> Result<MilpResult> {
    let partition = partition_assignable(instance);
    let space = partition.assignment_space();
    if space > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyAssignments(space));
    }
    let tasks = instance.tasks();
    let employees = instance.employees();
    let target = target_for(instance, &partition);

    // hours[k][c] and cost[k][c] for the c-th qualified employee of task k
    let mut hours = Vec::with_capacity(partition.assignable.len());
    let mut costs = Vec::with_capacity(partition.assignable.len());
    for (k, &t) in partition.assignable.iter().enumerate() {
        let task = &tasks[t];
        let mut h = Vec::new();
        let mut c = Vec::new();
        for &i in &partition.qualified[k] {
            let e = &employees[i];
            let eff = e
                .efficiency(task.required_skill())
                .expect("qualified employees hold the skill");
            h.push(task.duration() / eff);
            c.push(match mode {
                OracleMode::Balance => 0.0,
                OracleMode::Cost(hp) => assignment_cost(e, task, &hp)?,
            });
        }
        hours.push(h);
        costs.push(c);
    }

    let evaluate = |choices: &[usize]| -> (f64, f64, f64, f64) {
        let mut loads = vec![0.0; employees.len()];
        let mut total_cost = 0.0;
        for (k, &c) in choices.iter().enumerate() {
            loads[partition.qualified[k][c]] += hours[k][c];
            total_cost += costs[k][c];
        }
        let above = loads.iter().fold(0.0f64, |m, &w| m.max(w - target));
        let below = loads.iter().fold(0.0f64, |m, &w| m.max(target - w));
        let objective = match mode {
            OracleMode::Balance => above + below,
            OracleMode::Cost(hp) => hp.lambda * (above + below) + (1.0 - hp.lambda) * total_cost,
        };
        (objective, above, below, total_cost)
    };

    let m = partition.assignable.len();
    let mut choices = vec![0usize; m];
    let mut best_choices = choices.clone();
    let mut best = evaluate(&choices);
    let mut count: u64 = 1;
    'outer: loop {
        // odometer: the last task turns fastest
        let mut k = m;
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            choices[k] += 1;
            if choices[k] < partition.qualified[k].len() {
                break;
            }
            choices[k] = 0;
        }
        count += 1;
        let value = evaluate(&choices);
        if value.0 < best.0 {
            best = value;
            best_choices.copy_from_slice(&choices);
        }
    }

    let mut solution = Vec::new();
    for (k, &c) in best_choices.iter().enumerate() {
        for pos in 0..partition.qualified[k].len() {
            solution.push(if pos == c { 1.0 } else { 0.0 });
        }
    }
    solution.push(best.1);
    solution.push(best.2);

    let employee_choices: Vec<usize> = best_choices
        .iter()
        .enumerate()
        .map(|(k, &c)| partition.qualified[k][c])
        .collect();
    Ok(MilpResult {
        status: MilpStatus::Optimal,
        assignment: Assignment::from_choices(instance, &partition, &employee_choices),
        solution,
        objective: best.0,
        best_bound: best.0,
        root_bound: best.0,
        gap: Gap {
            percent: 0.0,
            absolute: best.0 == 0.0,
        },
        nodes: count,
        lp_iterations: 0,
        wall_time: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::*;
    use crate::domain::EmployeeId;

    fn eid(s: &str) -> EmployeeId {
        EmployeeId::new(s).unwrap()
    }

    #[test]
    fn two_by_two_splits_evenly() {
        let inst = ProblemInstance::new(
            vec![
                employee("e1", 3, &[("java", 1.0)]),
                employee("e2", 3, &[("java", 1.0)]),
            ],
            vec![task("t1", "java", 6.0, 1), task("t2", "java", 6.0, 1)],
        )
        .unwrap();
        let r = brute_force(&inst, OracleMode::Balance).unwrap();
        assert_eq!(r.objective, 0.0);
        assert_eq!(r.nodes, 4);
        let a = &r.assignment;
        assert_ne!(
            a.employee_of(&inst.tasks()[0].id().clone()),
            a.employee_of(&inst.tasks()[1].id().clone())
        );
    }

    #[test]
    fn single_employee_takes_everything() {
        let inst = ProblemInstance::new(
            vec![employee("e1", 3, &[("java", 0.5)])],
            vec![task("t1", "java", 3.0, 1), task("t2", "java", 5.0, 1)],
        )
        .unwrap();
        let r = brute_force(&inst, OracleMode::Balance).unwrap();
        // W = 16 against target 8: all overload
        assert_eq!(r.objective, 8.0);
        assert!(r.assignment.pairs.values().all(|e| *e == eid("e1")));
    }

    #[test]
    fn cost_mode_picks_cheapest_at_lambda_zero() {
        let inst = ProblemInstance::new(
            vec![
                employee("e1", 1, &[("java", 1.0)]),
                employee("e2", 5, &[("java", 1.0)]),
            ],
            vec![task("t1", "java", 4.0, 3)],
        )
        .unwrap();
        let hp = Hyperparams::new(0.0, 0.0, 0.0, 1.0).unwrap();
        let r = brute_force(&inst, OracleMode::Cost(hp)).unwrap();
        assert!((r.objective - 0.6).abs() < 1e-12);
        assert_eq!(r.assignment.pairs.values().next(), Some(&eid("e2")));
    }

    #[test]
    fn ties_keep_first_in_enumeration_order() {
        let inst = ProblemInstance::new(
            vec![
                employee("e1", 3, &[("java", 1.0)]),
                employee("e2", 3, &[("java", 1.0)]),
            ],
            vec![task("t1", "java", 6.0, 1), task("t2", "java", 6.0, 1)],
        )
        .unwrap();
        let r = brute_force(&inst, OracleMode::Balance).unwrap();
        assert_eq!(r.assignment.pairs.values().cloned().collect::<Vec<_>>(), vec![eid("e1"), eid("e2")]);
        assert_eq!(r.solution, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn guard_rejects_large_spaces() {
        let employees: Vec<_> = (0..10)
            .map(|i| employee(&alloc::format!("e{i}"), 3, &[("java", 1.0)]))
            .collect();
        let tasks: Vec<_> = (0..8)
            .map(|i| task(&alloc::format!("t{i}"), "java", 1.0, 1))
            .collect();
        let inst = ProblemInstance::new(employees, tasks).unwrap();
        assert_eq!(
            brute_force(&inst, OracleMode::Balance).unwrap_err(),
            Error::TooManyAssignments(100_000_000)
        );
    }

    #[test]
    fn no_assignable_tasks() {
        let inst = ProblemInstance::new(
            vec![employee("e1", 3, &[("java", 1.0)])],
            vec![task("t1", "go", 6.0, 1)],
        )
        .unwrap();
        let r = brute_force(&inst, OracleMode::Balance).unwrap();
        assert_eq!(r.objective, 0.0);
        assert_eq!(r.assignment.unassigned.len(), 1);
        assert_eq!(r.solution, vec![0.0, 0.0]);
    }
}
