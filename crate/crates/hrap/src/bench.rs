//! Scaling benchmark over synthetic instances.

use std::time::Instant;

use hrap_core::synth::generate_synthetic;
use hrap_core::{build_balance_model, solve_milp, variable_count, SolveConfig};
use serde::Serialize;

/// One solved benchmark cell. Objective and gap are absent when the cell failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n_employees: usize,
    pub n_tasks: usize,
    pub seed: u64,
    pub variable_count: usize,
    /// Model build plus solve.
    pub wall_time_s: f64,
    pub gap_percent: Option<f64>,
    pub objective: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub n_employees: usize,
    pub n_tasks: usize,
    pub runs: usize,
    pub median_wall_time_s: f64,
    pub median_gap_percent: Option<f64>,
    pub max_gap_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<(usize, usize)>,
    pub seeds: Vec<u64>,
    pub n_skills: usize,
    pub solve: SolveConfig,
}

/// Parses `20x80,50x150`.
pub fn parse_sizes(s: &str) -> Result<Vec<(usize, usize)>, String> {
    s.split(',')
        .map(|part| {
            let (n, m) = part
                .trim()
                .split_once(['x', 'X'])
                .ok_or_else(|| format!("size `{part}` is not of the form NxM"))?;
            let n: usize = n.parse().map_err(|_| format!("bad employee count in `{part}`"))?;
            let m: usize = m.parse().map_err(|_| format!("bad task count in `{part}`"))?;
            if n == 0 || m == 0 {
                return Err(format!("size `{part}` must have positive counts"));
            }
            Ok((n, m))
        })
        .collect()
}

/// Solves every size and seed one after another and returns the rows sorted by
/// `(N, M, seed)`. `on_row` sees each row as it completes.
pub fn run_benchmark(cfg: &BenchConfig, mut on_row: impl FnMut(&BenchRow)) -> Vec<BenchRow> {
    let mut rows = Vec::with_capacity(cfg.sizes.len() * cfg.seeds.len());
    for &(n, m) in &cfg.sizes {
        for &seed in &cfg.seeds {
            let row = run_cell(n, m, cfg.n_skills, seed, &cfg.solve);
            on_row(&row);
            rows.push(row);
        }
    }
    rows.sort_by_key(|r| (r.n_employees, r.n_tasks, r.seed));
    rows
}

pub fn run_cell(n: usize, m: usize, n_skills: usize, seed: u64, solve: &SolveConfig) -> BenchRow {
    let failed = |status: String| BenchRow {
        n_employees: n,
        n_tasks: m,
        seed,
        variable_count: 0,
        wall_time_s: 0.0,
        gap_percent: None,
        objective: None,
        status,
    };
    let inst = match generate_synthetic(n, m, n_skills, seed) {
        Ok(inst) => inst,
        Err(e) => return failed(format!("error: {e}")),
    };
    let start = Instant::now();
    let model = build_balance_model(&inst);
    let result = solve_milp(&model, solve);
    let wall = start.elapsed().as_secs_f64();
    log::info!(
        "{n}x{m} seed {seed}: {} objective {} gap {:.4}% in {wall:.2}s",
        result.status.as_str(),
        result.objective,
        result.gap.percent
    );
    let solved = !result.solution.is_empty();
    BenchRow {
        n_employees: n,
        n_tasks: m,
        seed,
        variable_count: variable_count(&inst),
        wall_time_s: wall,
        gap_percent: solved.then_some(result.gap.percent),
        objective: solved.then_some(result.objective),
        status: result.status.as_str().to_string(),
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let k = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[k]
    } else {
        (values[k - 1] + values[k]) / 2.0
    })
}

/// Per-size medians in first-appearance order of `rows`.
pub fn summarize(rows: &[BenchRow]) -> Vec<BenchSummary> {
    let mut sizes: Vec<(usize, usize)> = Vec::new();
    for r in rows {
        if !sizes.contains(&(r.n_employees, r.n_tasks)) {
            sizes.push((r.n_employees, r.n_tasks));
        }
    }
    sizes
        .into_iter()
        .map(|(n, m)| {
            let cell: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| r.n_employees == n && r.n_tasks == m)
                .collect();
            let mut times: Vec<f64> = cell.iter().map(|r| r.wall_time_s).collect();
            let mut gaps: Vec<f64> = cell.iter().filter_map(|r| r.gap_percent).collect();
            let max_gap = gaps.iter().copied().reduce(f64::max);
            BenchSummary {
                n_employees: n,
                n_tasks: m,
                runs: cell.len(),
                median_wall_time_s: median(&mut times).unwrap_or(0.0),
                median_gap_percent: median(&mut gaps),
                max_gap_percent: max_gap,
            }
        })
        .collect()
}
