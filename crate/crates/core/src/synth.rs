//! Seeded synthetic instances.
//!
//! Employees `e1..eN` hold 1 to `min(3, n_skills)` distinct skills from the
//! pool `s1..sK`, each with efficiency uniform on `[0.1, 1]`, and a
//! performance rating uniform on `1..=5`. Tasks `t1..tM` require a uniformly
//! drawn skill, last uniform `[1, 40]` hours and have complexity `1..=3`.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{Employee, ProblemInstance, SkillId, Task, DEFAULT_COMPLEXITY_MAX};
use crate::error::{Error, Result};

pub const EFFICIENCY_RANGE: (f64, f64) = (0.1, 1.0);
pub const DURATION_RANGE: (f64, f64) = (1.0, 40.0);
pub const MAX_SKILLS_PER_EMPLOYEE: usize = 3;
pub const MAX_COMPLEXITY: i64 = 3;

pub fn generate_synthetic(
    n_employees: usize,
    n_tasks: usize,
    n_skills: usize,
    seed: u64,
) -> Result<ProblemInstance> {
    if n_employees == 0 || n_tasks == 0 || n_skills == 0 {
        return Err(Error::InvalidConfig(format!(
            "synthetic sizes must be >= 1, got {n_employees} employees, {n_tasks} tasks, {n_skills} skills"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<SkillId> = (1..=n_skills)
        .map(|k| SkillId::new(format!("s{k}")))
        .collect::<Result<_>>()?;
    let per_employee = MAX_SKILLS_PER_EMPLOYEE.min(n_skills);

    let mut employees = Vec::with_capacity(n_employees);
    for i in 1..=n_employees {
        let count = rng.random_range(1..=per_employee);
        let mut picked = sample(&mut rng, n_skills, count).into_vec();
        picked.sort_unstable();
        let skills: Vec<(SkillId, f64)> = picked
            .into_iter()
            .map(|k| (pool[k].clone(), rng.random_range(EFFICIENCY_RANGE.0..=EFFICIENCY_RANGE.1)))
            .collect();
        let performance = rng.random_range(1..=5);
        employees.push(Employee::new(format!("e{i}").parse()?, performance, skills)?);
    }

    let mut tasks = Vec::with_capacity(n_tasks);
    for t in 1..=n_tasks {
        let skill = pool[rng.random_range(0..n_skills)].clone();
        let duration = rng.random_range(DURATION_RANGE.0..=DURATION_RANGE.1);
        let complexity = rng.random_range(1..=MAX_COMPLEXITY);
        tasks.push(Task::new(
            format!("t{t}").parse()?,
            skill,
            duration,
            complexity,
            DEFAULT_COMPLEXITY_MAX,
        )?);
    }
    ProblemInstance::new(employees, tasks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic(20, 80, 6, 42).unwrap();
        let b = generate_synthetic(20, 80, 6, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_synthetic(20, 80, 6, 43).unwrap());
    }

    #[test]
    fn values_in_range() {
        let inst = generate_synthetic(30, 100, 6, 1).unwrap();
        for e in inst.employees() {
            let n = e.efficiencies().len();
            assert!((1..=3).contains(&n));
            assert!((1..=5).contains(&e.performance()));
            assert!(e.efficiencies().values().all(|&v| (0.1..=1.0).contains(&v)));
        }
        for t in inst.tasks() {
            assert!((1..=3).contains(&t.complexity()));
            assert!((1.0..=40.0).contains(&t.duration()));
        }
    }

    #[test]
    fn rejects_zero_counts() {
        assert!(generate_synthetic(0, 1, 1, 0).is_err());
        assert!(generate_synthetic(1, 0, 1, 0).is_err());
        assert!(generate_synthetic(1, 1, 0, 0).is_err());
    }
}
