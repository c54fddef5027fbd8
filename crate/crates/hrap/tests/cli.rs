use std::path::Path;
use std::process::{Command, Output};

fn hrap(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hrap"))
        .args(args)
        .current_dir(dir)
        .env("NO_COLOR", "1")
        .output()
        .expect("binary runs")
}

fn dataset(dir: &Path, n: &str, m: &str) {
    let out = hrap(
        &[
            "gen", "--n-employees", n, "--n-tasks", m, "--n-skills", "3", "--seed", "1",
            "--employees", "e.csv", "--tasks", "t.csv",
        ],
        dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = hrap(&["allocate", "--bogus"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = hrap(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = hrap(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("allocate"));
}

#[test]
fn bad_dataset_reports_line_and_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("e.csv"),
        "employee_id,skill,efficiency,performance_rating\ne1,java,0.8,4\ne2,java,1.5,3\n",
    )
    .unwrap();
    std::fs::write(d.join("t.csv"), "task_id,required_skill,duration_hours,complexity\nt1,java,8,2\n")
        .unwrap();
    let out = hrap(&["allocate", "--employees", "e.csv", "--tasks", "t.csv"], d);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("efficiency"), "{err}");
}

#[test]
fn mutually_exclusive_observation_sources() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path(), "3", "6");
    let base = ["adapt", "--employees", "e.csv", "--tasks", "t.csv"];
    assert_eq!(hrap(&base, dir.path()).status.code(), Some(1));
    let both = [&base[..], &["--simulate", "--observations", "o.csv"]].concat();
    assert_eq!(hrap(&both, dir.path()).status.code(), Some(1));
}

#[test]
fn cost_mode_defaults_to_initial_weights() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    dataset(d, "4", "10");
    let out = hrap(
        &["allocate", "--employees", "e.csv", "--tasks", "t.csv", "--mode", "cost", "--out", "r.json"],
        d,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&d.join("r.json"));
    let hp = &r["config"]["model"]["hyperparams"];
    assert_eq!(hp["lambda"], 0.5);
    for k in ["alpha", "beta", "gamma"] {
        assert!((hp[k].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }
    assert!(r["total_cost"].as_f64().unwrap() > 0.0);
    assert!(r["metrics"]["greedy_proxy"].is_object());
    assert_eq!(r["tool"]["name"], "hrap");
}

#[test]
fn unnormalized_weights_need_the_escape_hatch() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    dataset(d, "3", "6");
    let args = [
        "allocate", "--employees", "e.csv", "--tasks", "t.csv", "--mode", "cost", "--alpha", "1",
        "--beta", "1", "--gamma", "1", "--out", "r.json",
    ];
    assert_eq!(hrap(&args, d).status.code(), Some(1));
    let loose = [&args[..], &["--no-normalize"]].concat();
    assert!(hrap(&loose, d).status.success());
}

#[test]
fn time_limit_exits_2_and_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    dataset(d, "20", "80");
    let out = hrap(
        &[
            "allocate", "--employees", "e.csv", "--tasks", "t.csv", "--node-limit", "1", "--out",
            "r.json",
        ],
        d,
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&d.join("r.json"));
    assert_ne!(r["solver"]["status"], "optimal");
    assert_eq!(r["assignment"].as_object().unwrap().len(), 80 - r["unassigned"].as_array().unwrap().len());
}

#[test]
fn adapt_with_recorded_observations() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("e.csv"),
        "employee_id,skill,efficiency,performance_rating\ne1,java,1,3\ne2,java,1,3\n",
    )
    .unwrap();
    std::fs::write(
        d.join("t.csv"),
        "task_id,required_skill,duration_hours,complexity\nt1,java,4,1\nt2,java,4,1\n",
    )
    .unwrap();
    // Both assignments of iteration 1 are recorded whichever employee gets which task.
    std::fs::write(
        d.join("o.csv"),
        "iteration,employee_id,task_id,actual_time_hours\n1,e1,t1,8\n1,e1,t2,8\n1,e2,t1,4\n1,e2,t2,4\n",
    )
    .unwrap();
    let out = hrap(
        &[
            "adapt", "--employees", "e.csv", "--tasks", "t.csv", "--observations", "o.csv",
            "--iterations", "1", "--out", "a.json", "--trace", "trace.jsonl", "--efficiencies-out",
            "eff.csv",
        ],
        d,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let eff = std::fs::read_to_string(d.join("eff.csv")).unwrap();
    assert_eq!(eff, "employee_id,skill,efficiency\ne1,java,0.5\ne2,java,1\n");
    let trace = std::fs::read_to_string(d.join("trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 1);

    // A second iteration has no records, so the run fails on input.
    let out = hrap(
        &["adapt", "--employees", "e.csv", "--tasks", "t.csv", "--observations", "o.csv", "--iterations", "2"],
        d,
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("iteration 2"));
}

#[test]
fn tune_writes_ranked_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    dataset(d, "3", "8");
    let out = hrap(
        &[
            "tune", "--employees", "e.csv", "--tasks", "t.csv", "--budget", "1", "--out", "rank.csv",
            "--sensitivity-out", "sens.csv",
        ],
        d,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rank = std::fs::read_to_string(d.join("rank.csv")).unwrap();
    let mut lines = rank.lines();
    assert_eq!(
        lines.next().unwrap(),
        "rank,lambda,alpha,beta,gamma,objective,dev_above,dev_below,total_cost"
    );
    // The first grid point is the initial weighting.
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1");
    assert_eq!(first[1], "0.5");
    let sens = std::fs::read_to_string(d.join("sens.csv")).unwrap();
    assert_eq!(sens.lines().count(), 5);
    assert!(sens.lines().skip(1).all(|l| l.ends_with(",0,low")), "{sens}");
}

#[test]
fn bench_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = hrap(
        &[
            "bench", "--sizes", "20x80,50x150", "--seeds", "5", "--time-limit-s", "1", "--out",
            "b.csv", "--summary-out", "s.csv",
        ],
        d,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = std::fs::read_to_string(d.join("b.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 10);
    let keys: Vec<(String, String)> = rows
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[2].to_string())
        })
        .collect();
    assert_eq!(keys[0], ("20".into(), "0".into()));
    assert_eq!(keys[9], ("50".into(), "4".into()));
    let summary = std::fs::read_to_string(d.join("s.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
}

#[test]
fn dump_lp_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    dataset(d, "3", "6");
    for name in ["a.lp", "b.lp"] {
        let out = hrap(
            &["allocate", "--employees", "e.csv", "--tasks", "t.csv", "--dump-lp", name, "--out", "r.json"],
            d,
        );
        assert!(out.status.success());
    }
    let a = std::fs::read_to_string(d.join("a.lp")).unwrap();
    assert_eq!(a, std::fs::read_to_string(d.join("b.lp")).unwrap());
    assert!(a.contains("Minimize"), "{a}");
}
