//! Acceptance criteria, one test each. Every test prints a single
//! `PASS`/`FAIL` line on stderr (bypassing capture) before asserting.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::Mutex;
use std::time::Instant;

use hrap::bench::{run_benchmark, summarize, BenchConfig};
use hrap_core::adaptive::{AdaptiveConfig, SimulatedWorkforce};
use hrap_core::cost::{assignment_cost, cost_table, Hyperparams};
use hrap_core::metrics::{greedy_assignment, random_assignment, MetricsBlock};
use hrap_core::oracle::{brute_force, OracleMode};
use hrap_core::synth::generate_synthetic;
use hrap_core::{
    build_balance_model, build_cost_model, gini, jain, optimality_gap, partition_assignable,
    run_adaptive, solve_milp, update_efficiency, variable_count, variance, ProblemInstance,
    SolveConfig,
};

/// Criteria run one at a time so timings are not skewed by each other.
static SERIAL: Mutex<()> = Mutex::new(());

fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "{} criterion {id} ({name}): {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {id} failed: {detail}");
}

fn exact() -> SolveConfig {
    SolveConfig {
        gap_tolerance: 0.0,
        ..Default::default()
    }
}

/// Instance `i` of a deterministic sweep over every size with N <= 5, M <= 8.
fn small(i: u64) -> ProblemInstance {
    let n = 1 + (i % 5) as usize;
    let m = 1 + ((i / 5) % 8) as usize;
    let k = 1 + (i % 3) as usize + ((i / 40) % 2) as usize;
    generate_synthetic(n, m, k, 1000 + i).unwrap()
}

#[test]
fn criterion_1_oracle_equivalence() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for i in 0..200 {
        let inst = small(i);
        let milp = solve_milp(&build_balance_model(&inst), &exact());
        let oracle = brute_force(&inst, OracleMode::Balance).unwrap();
        let diff = (milp.objective - oracle.objective).abs();
        worst = worst.max(diff);
        if diff > 1e-9 || milp.assignment.check_feasible(&inst).is_err() {
            bad.push(i);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "oracle equivalence",
        bad.is_empty() && secs < 60.0,
        &format!(
            "200 instances, max |milp - oracle| = {worst:.3e} (tol 1e-9), mismatches {bad:?}, {secs:.1}s (limit 60s)"
        ),
    );
}

#[test]
fn criterion_2_fairness_trend() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let cfg = SolveConfig {
        time_limit: 2.0,
        ..Default::default()
    };
    let (mut fairer, mut above_greedy) = (0, 0);
    let mut sums = [0.0f64; 4];
    for seed in 0..100u64 {
        let inst = generate_synthetic(20, 80, 6, seed).unwrap();
        let milp = solve_milp(&build_balance_model(&inst), &cfg);
        let ours = MetricsBlock::for_assignment(&milp.assignment, &inst, false).unwrap();
        let random =
            MetricsBlock::for_assignment(&random_assignment(&inst, seed), &inst, false).unwrap();
        let greedy = MetricsBlock::for_assignment(&greedy_assignment(&inst), &inst, false).unwrap();
        if ours.gini < random.gini && ours.jain > random.jain {
            fairer += 1;
        }
        if ours.objective > greedy.objective + 1e-9 {
            above_greedy += 1;
        }
        sums[0] += random.gini;
        sums[1] += ours.gini;
        sums[2] += random.jain;
        sums[3] += ours.jain;
    }
    verdict(
        2,
        "fairness trend",
        fairer >= 95 && above_greedy == 0,
        &format!(
            "MILP fairer than random on {fairer}/100 (need >= 95), worse than greedy on {above_greedy}/100 (need 0); \
             mean gini {:.3} -> {:.3}, mean jain {:.3} -> {:.3}",
            sums[0] / 100.0,
            sums[1] / 100.0,
            sums[2] / 100.0,
            sums[3] / 100.0
        ),
    );
}

#[test]
fn criterion_3_metric_exactness() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let checks = [
        ("gini({1,0})", gini(&[1.0, 0.0]).unwrap(), 0.5),
        ("jain({1,0})", jain(&[1.0, 0.0]).unwrap(), 0.5),
        ("gini(const)", gini(&[7.5; 5]).unwrap(), 0.0),
        ("jain(const)", jain(&[7.5; 5]).unwrap(), 1.0),
        ("variance({1,2,3,4})", variance(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 1.25),
    ];
    let failed: Vec<String> = checks
        .iter()
        .filter(|(_, got, want)| (got - want).abs() > 1e-12)
        .map(|(name, got, want)| format!("{name} = {got}, expected {want}"))
        .collect();
    verdict(
        3,
        "metric exactness",
        failed.is_empty(),
        &if failed.is_empty() {
            "5 hand values within 1e-12".to_string()
        } else {
            failed.join("; ")
        },
    );
}

#[test]
fn criterion_4_update_rule() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let unit = update_efficiency(4.0, 8.0).unwrap() == 0.5
        && update_efficiency(4.0, 2.0).unwrap() == 1.0
        && update_efficiency(4.0, 4.0).unwrap() == 1.0;

    // Noiseless simulator whose truth is the dataset; estimates start at 1 so
    // pinning is observable.
    let mut pinned = 0usize;
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let inst = generate_synthetic(8, 24, 4, seed).unwrap();
        let mut sim = SimulatedWorkforce::from_instance(&inst, 0.0, seed).unwrap();
        let truth = sim.clone();
        let cfg = AdaptiveConfig {
            max_iterations: 4,
            reset_efficiency: true,
            solve: SolveConfig {
                time_limit: 1.0,
                ..Default::default()
            },
            ..Default::default()
        };
        let trace = run_adaptive(&inst, &mut sim, &cfg).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for record in &trace.iterations {
            for o in &record.observations {
                seen.insert((o.employee.clone(), o.skill.clone()));
            }
            // Every pair observed so far, in this or an earlier iteration.
            for (e, s) in &seen {
                let Some(est) = record.efficiencies.get(e).and_then(|m| m.get(s)) else {
                    continue;
                };
                let want = truth.true_efficiency(e, s).unwrap().min(1.0);
                worst = worst.max((est - want).abs());
                pinned += 1;
            }
        }
        for (e, s, v) in &trace.final_efficiencies {
            if seen.contains(&(e.clone(), s.clone())) {
                let want = truth.true_efficiency(e, s).unwrap().min(1.0);
                worst = worst.max((v - want).abs());
            }
        }
    }
    verdict(
        4,
        "efficiency update",
        unit && worst <= 1e-12 && pinned > 0,
        &format!(
            "update(4,8)=0.5, (4,2)=1, (4,4)=1: {unit}; noiseless pinning over {pinned} estimate checks, max error {worst:.3e} (tol 1e-12)"
        ),
    );
}

#[test]
fn criterion_5_lambda_limits() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let weights = [
        (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
        (0.5, 0.2, 0.3),
        (0.1, 0.1, 0.8),
        (1.0, 0.0, 0.0),
        (0.0, 0.0, 1.0),
    ];
    let (mut worst_one, mut worst_zero) = (0.0f64, 0.0f64);
    for i in 0..50u64 {
        let inst = small(7 * i + 3);
        let (a, b, g) = weights[i as usize % weights.len()];
        let balance = solve_milp(&build_balance_model(&inst), &exact()).objective;

        let hp1 = Hyperparams::new(1.0, a, b, g).unwrap();
        let m1 = build_cost_model(&inst, &hp1, &cost_table(&inst, &hp1).unwrap()).unwrap();
        worst_one = worst_one.max((solve_milp(&m1, &exact()).objective - balance).abs());

        let hp0 = Hyperparams::new(0.0, a, b, g).unwrap();
        let m0 = build_cost_model(&inst, &hp0, &cost_table(&inst, &hp0).unwrap()).unwrap();
        let got = solve_milp(&m0, &exact()).objective;
        let p = partition_assignable(&inst);
        let want: f64 = p
            .assignable
            .iter()
            .zip(&p.qualified)
            .map(|(&t, q)| {
                q.iter()
                    .map(|&e| assignment_cost(&inst.employees()[e], &inst.tasks()[t], &hp0).unwrap())
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        worst_zero = worst_zero.max((got - want).abs());
    }
    verdict(
        5,
        "lambda limits",
        worst_one <= 1e-9 && worst_zero <= 1e-9,
        &format!(
            "50 instances: max |cost(l=1) - balance| = {worst_one:.3e}, max |cost(l=0) - sum of min costs| = {worst_zero:.3e} (tol 1e-9)"
        ),
    );
}

#[test]
fn criterion_6_variable_count() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut mismatches = Vec::new();
    for i in 0..100u64 {
        let n = 1 + (i % 25) as usize;
        let m = 1 + ((i * 13) % 60) as usize;
        let k = 1 + (i % 8) as usize;
        let inst = generate_synthetic(n, m, k, 500 + i).unwrap();
        // Count qualified employees per task straight from the skill sets.
        let formula: usize = inst
            .tasks()
            .iter()
            .map(|t| {
                inst.employees()
                    .iter()
                    .filter(|e| e.skills().any(|s| s == t.required_skill()))
                    .count()
            })
            .sum::<usize>()
            + 2;
        let cols = build_balance_model(&inst).num_columns();
        if cols != formula || variable_count(&inst) != formula {
            mismatches.push((i, cols, formula));
        }
    }
    verdict(
        6,
        "variable count",
        mismatches.is_empty(),
        &format!("100 instances, column count == sum of qualified counts + 2; mismatches {mismatches:?}"),
    );
}

#[test]
fn criterion_7_scaling_trend() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let cfg = BenchConfig {
        sizes: vec![(20, 80), (50, 150), (100, 300)],
        seeds: (0..5).collect(),
        n_skills: 6,
        solve: SolveConfig {
            time_limit: 120.0,
            ..Default::default()
        },
    };
    let rows = run_benchmark(&cfg, |r| {
        let _ = std::io::stderr().write_all(
            format!(
                "  {}x{} seed {}: {} gap {:?}% in {:.1}s\n",
                r.n_employees, r.n_tasks, r.seed, r.status, r.gap_percent, r.wall_time_s
            )
            .as_bytes(),
        );
    });
    let summary = summarize(&rows);
    let medians: Vec<f64> = summary.iter().map(|s| s.median_wall_time_s).collect();
    let monotone = medians.windows(2).all(|w| w[0] <= w[1]);
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap_percent.unwrap_or(f64::INFINITY)).collect();
    let all_within = gaps.iter().all(|&g| g <= 2.5);
    let small_cell = rows
        .iter()
        .filter(|r| r.n_employees == 20)
        .all(|r| r.gap_percent.is_some_and(|g| g <= 0.2));
    let cells: Vec<String> = summary
        .iter()
        .map(|s| {
            format!(
                "{}x{} median {:.1}s max gap {:.3}%",
                s.n_employees,
                s.n_tasks,
                s.median_wall_time_s,
                s.max_gap_percent.unwrap_or(f64::INFINITY)
            )
        })
        .collect();
    verdict(
        7,
        "scaling trend",
        monotone && all_within && small_cell,
        &format!(
            "{}; median time nondecreasing: {monotone}; all gaps <= 2.5%: {all_within}; 20x80 gaps <= 0.2%: {small_cell}",
            cells.join(", ")
        ),
    );
}

fn hrap(args: &[&str], dir: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_hrap"))
        .args(args)
        .current_dir(dir)
        .env("NO_COLOR", "1")
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

/// Report bytes without the lines carrying wall-clock fields.
fn without_wall_time(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.contains("\"wall_time_s\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn criterion_8_cli_determinism() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen = [
        "gen", "--n-employees", "6", "--n-tasks", "16", "--n-skills", "3", "--seed", "9",
        "--employees", "e.csv", "--tasks", "t.csv",
    ];
    assert_eq!(hrap(&gen, d), 0);
    let data = ["--employees", "e.csv", "--tasks", "t.csv"];
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("allocate balance", vec!["allocate", "--mode", "balance", "--seed", "3"]),
        ("allocate cost", vec!["allocate", "--mode", "cost", "--lambda", "0.7"]),
        (
            "adapt",
            vec!["adapt", "--simulate", "--noise-sigma", "0.2", "--iterations", "3", "--seed", "5"],
        ),
        ("tune", vec!["tune", "--budget", "8", "--top", "4", "--strategy", "random", "--seed", "2"]),
    ];
    let mut failures = Vec::new();
    for (name, base) in &cases {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = format!("out{run}.json");
            let mut args: Vec<&str> = base.clone();
            args.extend(data);
            if base[0] == "tune" {
                args.extend(["--report", &out]);
            } else {
                args.extend(["--out", &out]);
            }
            let code = hrap(&args, d);
            if code != 0 {
                failures.push(format!("{name}: exit {code}"));
            }
            outputs.push(without_wall_time(&d.join(&out)));
        }
        if outputs[0] != outputs[1] {
            failures.push(format!("{name}: reports differ"));
        }
    }
    // The metrics command reproduces the solver's deviations.
    assert_eq!(
        hrap(&["allocate", "--employees", "e.csv", "--tasks", "t.csv", "--out", "r.json", "--assignment-out", "a.csv"], d),
        0
    );
    let mut metrics_runs = Vec::new();
    for run in 0..2 {
        let out = format!("m{run}.json");
        let code = hrap(
            &["metrics", "--employees", "e.csv", "--tasks", "t.csv", "--assignment", "a.csv", "--out", &out],
            d,
        );
        if code != 0 {
            failures.push(format!("metrics: exit {code}"));
        }
        metrics_runs.push(without_wall_time(&d.join(&out)));
    }
    if metrics_runs[0] != metrics_runs[1] {
        failures.push("metrics: reports differ".into());
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    let scored: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("m0.json")).unwrap()).unwrap();
    let above = report["solver"]["dev_above"].as_f64().unwrap();
    let below = report["solver"]["dev_below"].as_f64().unwrap();
    if (scored["metrics"]["max_above"].as_f64().unwrap() - above).abs() > 1e-7
        || (scored["metrics"]["max_below"].as_f64().unwrap() - below).abs() > 1e-7
    {
        failures.push("metrics: deviations differ from the solver's".into());
    }
    verdict(
        8,
        "CLI determinism",
        failures.is_empty(),
        &if failures.is_empty() {
            "allocate (balance, cost), adapt, tune, metrics: repeated reports byte-identical apart from wall_time_s".to_string()
        } else {
            failures.join("; ")
        },
    );
}

#[test]
fn criterion_9_gap_formula() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let g = optimality_gap(102.0, 100.0);
    let same = [0.0, 1.0, 37.25, 1e6]
        .iter()
        .all(|&x| optimality_gap(x, x).percent == 0.0);
    verdict(
        9,
        "gap formula",
        g.percent == 2.0 && !g.absolute && same,
        &format!("gap(102, 100) = {}, gap(x, x) = 0 for all probes: {same}", g.percent),
    );
}
