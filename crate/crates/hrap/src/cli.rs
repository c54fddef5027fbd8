//! Command-line interface.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hrap_core::adaptive::{AllocationMode, RecordedObservations};
use hrap_core::cost::{cost_table, sensitivity_report, tune_hyperparams, SearchStrategy, TuneConfig};
use hrap_core::metrics::{greedy_assignment, random_assignment, workload_vector, MetricsBlock};
use hrap_core::model::{build_balance_model_with, build_cost_model_with, DeviationForm, ModelOptions};
use hrap_core::synth::generate_synthetic;
use hrap_core::{
    run_adaptive, AdaptiveConfig, FilterRule, Hyperparams, MilpStatus, ObservationSource,
    ProblemInstance, SimulatedWorkforce, SolveConfig,
};
use serde::Serialize;

use crate::bench::{parse_sizes, run_benchmark, summarize, BenchConfig};
use crate::io;
use crate::report::{
    self, aligned, assignment_map, id_list, to_json, AdaptReport, HyperparamsEcho, InstanceSummary,
    Metrics, MetricsReport, RunReport, SolverStats, Style, TuneReport,
};

/// Exit code for bad input, bad flags or validation failures.
pub const EXIT_INVALID: i32 = 1;
/// Exit code when the solver fails or stops at a limit.
pub const EXIT_SOLVER: i32 = 2;

/// Marks an error as a solver outcome rather than an input problem.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct SolverFailure(pub String);

#[derive(Debug, Parser)]
#[command(name = "hrap", version, about = "Fair, skill-constrained task allocation")]
struct Cli {
    /// More log output on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one allocation and write a JSON report.
    Allocate(AllocateArgs),
    /// Run the adaptive efficiency loop.
    Adapt(AdaptArgs),
    /// Search the cost-model hyperparameters.
    Tune(TuneArgs),
    /// Score an existing assignment file.
    Metrics(MetricsArgs),
    /// Solve synthetic instances over a size ladder.
    Bench(BenchArgs),
    /// Write a synthetic dataset.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Default)]
#[serde(rename_all = "lowercase")]
enum Mode {
    #[default]
    Balance,
    Cost,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Default)]
#[serde(rename_all = "lowercase")]
enum Filter {
    Any,
    #[default]
    Max,
    Mean,
}

impl From<Filter> for FilterRule {
    fn from(f: Filter) -> Self {
        match f {
            Filter::Any => FilterRule::Any,
            Filter::Max => FilterRule::Max,
            Filter::Mean => FilterRule::Mean,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Default)]
#[serde(rename_all = "lowercase")]
enum Strategy {
    #[default]
    Grid,
    Random,
}

#[derive(Debug, Args, Serialize)]
struct DataArgs {
    /// Employee CSV: employee_id,skill,efficiency,performance_rating.
    #[arg(long)]
    employees: PathBuf,
    /// Task CSV: task_id,required_skill,duration_hours,complexity.
    #[arg(long)]
    tasks: PathBuf,
    /// Largest accepted task complexity.
    #[arg(long, default_value_t = hrap_core::domain::DEFAULT_COMPLEXITY_MAX)]
    complexity_max: u32,
}

impl DataArgs {
    fn load(&self) -> anyhow::Result<ProblemInstance> {
        let employees = io::load_employees(&self.employees)?;
        let tasks = io::load_tasks(&self.tasks, self.complexity_max)?;
        Ok(ProblemInstance::new(employees, tasks)?)
    }
}

#[derive(Debug, Args, Serialize)]
struct SolverArgs {
    /// Relative optimality gap at which the search stops, as a fraction.
    #[arg(long, default_value_t = 1e-6)]
    gap_tol: f64,
    /// Wall-clock limit per solve, in seconds.
    #[arg(long, default_value_t = 60.0)]
    time_limit_s: f64,
    /// Branch-and-bound node limit per solve.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Seed for the random baseline, search and simulation streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn config(&self) -> anyhow::Result<SolveConfig> {
        let cfg = SolveConfig {
            gap_tolerance: self.gap_tol,
            time_limit: self.time_limit_s,
            node_limit: self.node_limit,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args, Serialize)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = Mode::Balance)]
    mode: Mode,
    /// Weight of the balance term in cost mode (default 0.5).
    #[arg(long)]
    lambda: Option<f64>,
    /// Weight of effective hours in the cost (default 1/3).
    #[arg(long)]
    alpha: Option<f64>,
    /// Weight of the skill-mismatch penalty (default 1/3).
    #[arg(long)]
    beta: Option<f64>,
    /// Weight of complexity over performance (default 1/3).
    #[arg(long)]
    gamma: Option<f64>,
    /// Accept alpha + beta + gamma != 1.
    #[arg(long)]
    no_normalize: bool,
    /// Bound assignment cost instead of effective hours in the fairness rows.
    #[arg(long)]
    fairness_on_cost: bool,
    /// Minimize a single bound on |W_i - W_target| instead of D+ + D-.
    #[arg(long)]
    min_max: bool,
}

impl ModelArgs {
    fn options(&self) -> ModelOptions {
        ModelOptions {
            deviation: if self.min_max {
                DeviationForm::MinMax
            } else {
                DeviationForm::Split
            },
            fairness_on_cost: self.fairness_on_cost,
        }
    }

    fn hyperparams(&self) -> anyhow::Result<Hyperparams> {
        let d = Hyperparams::default();
        let (l, a, b, g) = (
            self.lambda.unwrap_or(d.lambda),
            self.alpha.unwrap_or(d.alpha),
            self.beta.unwrap_or(d.beta),
            self.gamma.unwrap_or(d.gamma),
        );
        Ok(if self.no_normalize {
            Hyperparams::unnormalized(l, a, b, g)?
        } else {
            Hyperparams::new(l, a, b, g)?
        })
    }

    fn allocation_mode(&self) -> anyhow::Result<AllocationMode> {
        Ok(match self.mode {
            Mode::Balance => AllocationMode::Balance,
            Mode::Cost => AllocationMode::Cost(self.hyperparams()?),
        })
    }

    /// Resolved settings for the config echo.
    fn echo(&self) -> anyhow::Result<serde_json::Value> {
        let mut v = serde_json::to_value(self)?;
        if let Mode::Cost = self.mode {
            v["hyperparams"] = serde_json::to_value(HyperparamsEcho::from(&self.hyperparams()?))?;
        }
        Ok(v)
    }
}

#[derive(Debug, Args, Serialize)]
struct AllocateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Report sample variance (divide by n - 1) instead of population variance.
    #[arg(long)]
    sample_variance: bool,
    /// Report JSON path; without it the report goes to stdout.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Also write the assignment as CSV.
    #[arg(long)]
    #[serde(skip)]
    assignment_out: Option<PathBuf>,
    /// Write the model in LP text form.
    #[arg(long)]
    #[serde(skip)]
    dump_lp: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct AdaptArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    /// Employees whose efficiencies fail this bound are dropped.
    #[arg(long, default_value_t = 0.1)]
    threshold: f64,
    /// Filtering never leaves fewer employees than this (default: number of
    /// distinct required skills).
    #[arg(long)]
    min_employees: Option<usize>,
    /// Start every efficiency at 1 instead of the dataset values.
    #[arg(long)]
    reset_efficiency: bool,
    /// Which efficiencies must exceed the threshold.
    #[arg(long, value_enum, default_value_t = Filter::Max)]
    filter: Filter,
    /// Weight of the newest observation in a moving average; off by default.
    #[arg(long)]
    smoothing: Option<f64>,
    /// Draw completion times from a seeded simulator.
    #[arg(long, conflicts_with = "observations", required_unless_present = "observations")]
    simulate: bool,
    /// True efficiencies for the simulator (employee_id,skill,efficiency);
    /// defaults to the dataset values.
    #[arg(long, requires = "simulate")]
    true_efficiencies: Option<PathBuf>,
    /// Log-normal noise on simulated times.
    #[arg(long, default_value_t = 0.0, requires = "simulate")]
    noise_sigma: f64,
    /// Recorded completion times: iteration,employee_id,task_id,actual_time_hours.
    #[arg(long)]
    observations: Option<PathBuf>,
    /// Report JSON path; without it the report goes to stdout.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// One JSON record per iteration.
    #[arg(long)]
    #[serde(skip)]
    trace: Option<PathBuf>,
    /// Final efficiencies as CSV (employee_id,skill,efficiency).
    #[arg(long)]
    #[serde(skip)]
    efficiencies_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct TuneArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = Strategy::Grid)]
    strategy: Strategy,
    /// Points to evaluate (default: the whole grid, or 50 random draws).
    #[arg(long)]
    budget: Option<usize>,
    /// Ranked entries to keep.
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// Grid points for lambda on [0, 1].
    #[arg(long, default_value_t = 11)]
    lambda_points: usize,
    /// Lattice divisions for (alpha, beta, gamma).
    #[arg(long, default_value_t = 6)]
    weight_divisions: usize,
    /// Sample (alpha, beta, gamma) from the unit cube instead of the simplex.
    #[arg(long)]
    no_normalize: bool,
    /// Bound assignment cost instead of effective hours in the fairness rows.
    #[arg(long)]
    fairness_on_cost: bool,
    /// Minimize a single bound on |W_i - W_target| instead of D+ + D-.
    #[arg(long)]
    min_max: bool,
    /// Ranking CSV.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Sensitivity CSV.
    #[arg(long)]
    #[serde(skip)]
    sensitivity_out: Option<PathBuf>,
    /// Full JSON report.
    #[arg(long)]
    #[serde(skip)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct MetricsArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Assignment CSV: task_id,employee_id (empty employee = unassigned).
    #[arg(long)]
    assignment: PathBuf,
    /// Report sample variance (divide by n - 1) instead of population variance.
    #[arg(long)]
    sample_variance: bool,
    /// Report JSON path; without it the report goes to stdout.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct BenchArgs {
    /// Comma-separated NxM sizes.
    #[arg(long, default_value = "20x80,50x150,100x300")]
    sizes: String,
    /// A seed count (seeds 0..n) or a comma-separated seed list.
    #[arg(long, default_value = "5")]
    seeds: String,
    /// Size of the skill pool.
    #[arg(long, default_value_t = 6)]
    skills: usize,
    /// Relative optimality gap at which each solve stops, as a fraction.
    #[arg(long, default_value_t = 1e-6)]
    gap_tol: f64,
    /// Wall-clock limit per solve, in seconds.
    #[arg(long, default_value_t = 120.0)]
    time_limit_s: f64,
    /// Branch-and-bound node limit per solve.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Row CSV; without it rows go to stdout.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Per-size median CSV.
    #[arg(long)]
    #[serde(skip)]
    summary_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    n_employees: usize,
    #[arg(long)]
    n_tasks: usize,
    /// Size of the skill pool.
    #[arg(long, default_value_t = 6)]
    n_skills: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output employee CSV.
    #[arg(long)]
    employees: PathBuf,
    /// Output task CSV.
    #[arg(long)]
    tasks: PathBuf,
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { 0 };
        }
    };
    init_logging(cli.verbose);
    let style = Style::detect();
    let outcome = match &cli.command {
        Command::Allocate(a) => allocate(a, style),
        Command::Adapt(a) => adapt(a, style),
        Command::Tune(a) => tune(a, style),
        Command::Metrics(a) => metrics(a, style),
        Command::Bench(a) => bench(a, style),
        Command::Gen(a) => gen(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<SolverFailure>().is_some() {
                EXIT_SOLVER
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes `text` to `path`, or to stdout when there is no path.
fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn with_sections(parts: &[(&str, serde_json::Value)]) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (k, v) in parts {
        map.insert((*k).to_string(), v.clone());
    }
    serde_json::Value::Object(map)
}

fn allocate(args: &AllocateArgs, style: Style) -> anyhow::Result<()> {
    let inst = args.data.load()?;
    let solve = args.solver.config()?;
    let options = args.model.options();
    let start = Instant::now();
    let (model, costs) = match args.model.allocation_mode()? {
        AllocationMode::Balance => (build_balance_model_with(&inst, options), None),
        AllocationMode::Cost(hp) => {
            let costs = cost_table(&inst, &hp)?;
            (build_cost_model_with(&inst, &hp, &costs, options)?, Some(costs))
        }
    };
    if let Some(path) = &args.dump_lp {
        write_text(path, &model.to_lp_string())?;
    }
    let result = hrap_core::solve_milp(&model, &solve);
    let wall = start.elapsed().as_secs_f64();

    let solved = !result.solution.is_empty();
    let dev = solved.then(|| {
        (
            result.solution[model.var_index.dev_plus()],
            result.solution[model.var_index.dev_minus()],
        )
    });
    let mut metrics = BTreeMap::new();
    if solved {
        metrics.insert(
            "milp",
            Metrics::from(&MetricsBlock::for_assignment(&result.assignment, &inst, args.sample_variance)?),
        );
    }
    metrics.insert(
        "greedy_proxy",
        Metrics::from(&MetricsBlock::for_assignment(&greedy_assignment(&inst), &inst, args.sample_variance)?),
    );
    metrics.insert(
        "random",
        Metrics::from(&MetricsBlock::for_assignment(
            &random_assignment(&inst, args.solver.seed),
            &inst,
            args.sample_variance,
        )?),
    );
    let total_cost = costs.filter(|_| solved).map(|c| {
        result
            .assignment
            .pairs
            .iter()
            .map(|(t, e)| c[&(e.clone(), t.clone())])
            .sum()
    });
    let config = with_sections(&[
        ("command", "allocate".into()),
        ("data", serde_json::to_value(&args.data)?),
        ("model", args.model.echo()?),
        ("solver", serde_json::to_value(&args.solver)?),
        ("sample_variance", args.sample_variance.into()),
    ]);
    let report = RunReport {
        tool: Default::default(),
        config,
        instance: InstanceSummary::of(&inst),
        assignment: assignment_map(&result.assignment),
        unassigned: id_list(&result.assignment.unassigned),
        total_cost,
        metrics,
        solver: SolverStats::of(&result, dev),
        wall_time_s: wall,
    };
    emit(args.out.as_deref(), &to_json(&report))?;
    if args.out.is_some() {
        print!("{}", report::summarize_run(&report, style));
    }
    if let (Some(path), true) = (&args.assignment_out, solved) {
        io::write_assignment(path, &result.assignment)?;
    }
    match result.status {
        MilpStatus::Optimal => Ok(()),
        MilpStatus::Infeasible => Err(SolverFailure("no feasible allocation".into()).into()),
        status => Err(SolverFailure(format!(
            "solver stopped at a limit ({}), gap {:.4}%",
            status.as_str(),
            result.gap.percent
        ))
        .into()),
    }
}

fn adapt(args: &AdaptArgs, style: Style) -> anyhow::Result<()> {
    let inst = args.data.load()?;
    let cfg = AdaptiveConfig {
        max_iterations: args.iterations,
        threshold: args.threshold,
        min_employees: args.min_employees,
        mode: args.model.allocation_mode()?,
        filter: args.filter.into(),
        reset_efficiency: args.reset_efficiency,
        smoothing: args.smoothing,
        solve: args.solver.config()?,
        model: args.model.options(),
    };
    cfg.validate()?;
    let mut source: Box<dyn ObservationSource> = if args.simulate {
        let sim = match &args.true_efficiencies {
            Some(path) => SimulatedWorkforce::new(
                io::load_efficiency_table(path)?,
                args.noise_sigma,
                args.solver.seed,
            )?,
            None => SimulatedWorkforce::from_instance(&inst, args.noise_sigma, args.solver.seed)?,
        };
        Box::new(sim)
    } else {
        let path = args.observations.as_ref().expect("clap requires one source");
        let obs: RecordedObservations = io::load_observations(path)?;
        Box::new(obs)
    };
    let trace = run_adaptive(&inst, source.as_mut(), &cfg).map_err(|e| match e {
        hrap_core::Error::InfeasibleIteration { .. } => anyhow::Error::new(SolverFailure(e.to_string())),
        other => other.into(),
    })?;

    let mut config_echo = serde_json::to_value(args)?;
    config_echo["model"] = args.model.echo()?;
    config_echo["command"] = "adapt".into();
    let report = AdaptReport::new(config_echo, &inst, &trace);
    emit(args.out.as_deref(), &to_json(&report))?;
    if let Some(path) = &args.trace {
        let mut text = String::new();
        for it in &report.iterations {
            text.push_str(&serde_json::to_string(it)?);
            text.push('\n');
        }
        write_text(path, &text)?;
    }
    if let Some(path) = &args.efficiencies_out {
        io::write_efficiency_table(path, &trace.final_efficiencies)?;
    }
    if args.out.is_some() {
        println!("{}", style.heading("adaptive iterations"));
        let rows: Vec<Vec<String>> = trace
            .iterations
            .iter()
            .map(|r| {
                vec![
                    r.iteration.to_string(),
                    r.employees.len().to_string(),
                    r.status.as_str().to_string(),
                    format!("{:.4}", r.objective),
                    r.removed.len().to_string(),
                    if r.guard_triggered { "yes" } else { "no" }.to_string(),
                ]
            })
            .collect();
        print!(
            "{}",
            aligned(&["iteration", "employees", "status", "objective", "removed", "guard"], &rows)
        );
    }
    let limited: Vec<usize> = trace
        .iterations
        .iter()
        .filter(|r| r.status != MilpStatus::Optimal)
        .map(|r| r.iteration)
        .collect();
    if !limited.is_empty() {
        return Err(SolverFailure(format!("solver stopped at a limit in iterations {limited:?}")).into());
    }
    Ok(())
}

fn tune(args: &TuneArgs, style: Style) -> anyhow::Result<()> {
    let inst = args.data.load()?;
    let solve = args.solver.config()?;
    let mut cfg = TuneConfig {
        strategy: match args.strategy {
            Strategy::Grid => SearchStrategy::Grid,
            Strategy::Random => SearchStrategy::Random,
        },
        budget: 0,
        seed: args.solver.seed,
        top_k: args.top,
        lambda_points: args.lambda_points,
        weight_divisions: args.weight_divisions,
        normalize: !args.no_normalize,
        model: ModelOptions {
            deviation: if args.min_max {
                DeviationForm::MinMax
            } else {
                DeviationForm::Split
            },
            fairness_on_cost: args.fairness_on_cost,
        },
    };
    if args.top == 0 {
        bail!("--top must be at least 1");
    }
    cfg.budget = match (args.budget, args.strategy) {
        (Some(b), _) => b,
        (None, Strategy::Grid) => hrap_core::cost::grid_points(&cfg).len(),
        (None, Strategy::Random) => 50,
    };
    if cfg.budget == 0 {
        bail!("--budget must be at least 1");
    }
    let start = Instant::now();
    let result = tune_hyperparams(&inst, &cfg, &solve)?;
    let wall = start.elapsed().as_secs_f64();
    if result.entries.is_empty() {
        return Err(SolverFailure("no hyperparameter point could be solved".into()).into());
    }
    let ranges = sensitivity_report(&result)?;
    if let Some(path) = &args.out {
        io::write_tuning(path, &result)?;
    }
    if let Some(path) = &args.sensitivity_out {
        io::write_sensitivity(path, &ranges)?;
    }
    let mut config_echo = serde_json::to_value(args)?;
    config_echo["command"] = "tune".into();
    config_echo["budget"] = cfg.budget.into();
    let report = TuneReport::new(config_echo, &inst, &result, &ranges, wall);
    if let Some(path) = &args.report {
        write_text(path, &to_json(&report))?;
    }

    println!("{}", style.heading("ranking"));
    let rows: Vec<Vec<String>> = report
        .ranking
        .iter()
        .map(|r| {
            vec![
                r.rank.to_string(),
                format!("{:.4}", r.lambda),
                format!("{:.4}", r.alpha),
                format!("{:.4}", r.beta),
                format!("{:.4}", r.gamma),
                format!("{:.4}", r.objective),
                format!("{:.4}", r.dev_above),
                format!("{:.4}", r.dev_below),
                format!("{:.4}", r.total_cost),
            ]
        })
        .collect();
    print!("{}", aligned(io::TUNING_HEADER, &rows));
    println!("{}", style.heading("sensitivity"));
    let rows: Vec<Vec<String>> = report
        .sensitivity
        .iter()
        .map(|r| {
            vec![
                r.parameter.to_string(),
                format!("{:.4}", r.min),
                format!("{:.4}", r.max),
                format!("{:.4}", r.range),
                r.sensitivity.to_string(),
            ]
        })
        .collect();
    print!("{}", aligned(io::SENSITIVITY_HEADER, &rows));
    if !result.failures.is_empty() {
        log::warn!("{} of {} points failed", result.failures.len(), result.evaluated);
    }
    Ok(())
}

fn metrics(args: &MetricsArgs, style: Style) -> anyhow::Result<()> {
    let inst = args.data.load()?;
    let assignment = io::load_assignment(&args.assignment)?;
    assignment.check_feasible(&inst)?;
    let block = MetricsBlock::for_assignment(&assignment, &inst, args.sample_variance)?;
    let workload = workload_vector(&assignment, &inst)?
        .entries
        .into_iter()
        .map(|(e, w)| (e.to_string(), w))
        .collect();
    let mut config_echo = serde_json::to_value(args)?;
    config_echo["command"] = "metrics".into();
    let report = MetricsReport {
        tool: Default::default(),
        config: config_echo,
        instance: InstanceSummary::of(&inst),
        workload,
        metrics: Metrics::from(&block),
    };
    emit(args.out.as_deref(), &to_json(&report))?;
    if args.out.is_some() {
        println!("{}", style.heading("metrics"));
        print!(
            "{}",
            report::metrics_table(&BTreeMap::from([("assignment", report.metrics.clone())]))
        );
    }
    Ok(())
}

fn parse_seeds(s: &str) -> anyhow::Result<Vec<u64>> {
    if s.contains(',') {
        s.split(',')
            .map(|p| p.trim().parse::<u64>().with_context(|| format!("bad seed `{p}`")))
            .collect()
    } else {
        let n: u64 = s.trim().parse().with_context(|| format!("bad seed count `{s}`"))?;
        if n == 0 {
            bail!("--seeds must be at least 1");
        }
        Ok((0..n).collect())
    }
}

fn bench(args: &BenchArgs, style: Style) -> anyhow::Result<()> {
    let sizes = parse_sizes(&args.sizes).map_err(anyhow::Error::msg)?;
    let seeds = parse_seeds(&args.seeds)?;
    if args.skills == 0 {
        bail!("--skills must be at least 1");
    }
    let solve = SolveConfig {
        gap_tolerance: args.gap_tol,
        time_limit: args.time_limit_s,
        node_limit: args.node_limit,
        seed: 0,
    };
    solve.validate()?;
    let cfg = BenchConfig {
        sizes,
        seeds,
        n_skills: args.skills,
        solve,
    };
    let rows = run_benchmark(&cfg, |r| {
        log::info!("finished {}x{} seed {}", r.n_employees, r.n_tasks, r.seed)
    });
    let summary = summarize(&rows);
    match &args.out {
        Some(path) => io::write_bench(path, &rows)?,
        None => {
            let mut t = io::Table::new(Path::new("<stdout>"), Box::new(std::io::stdout()), io::BENCH_HEADER)?;
            for r in &rows {
                t.row(io::bench_fields(r))?;
            }
            t.finish()?;
        }
    }
    if let Some(path) = &args.summary_out {
        io::write_bench_summary(path, &summary)?;
    }
    let table: Vec<Vec<String>> = summary
        .iter()
        .map(|s| {
            vec![
                format!("{}x{}", s.n_employees, s.n_tasks),
                s.runs.to_string(),
                format!("{:.3}", s.median_wall_time_s),
                s.median_gap_percent.map_or("-".into(), |g| format!("{g:.4}")),
                s.max_gap_percent.map_or("-".into(), |g| format!("{g:.4}")),
            ]
        })
        .collect();
    eprintln!("{}", style.heading("summary"));
    eprint!(
        "{}",
        aligned(&["size", "runs", "median_time_s", "median_gap_%", "max_gap_%"], &table)
    );
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| r.objective.is_none())
        .map(|r| format!("{}x{} seed {}", r.n_employees, r.n_tasks, r.seed))
        .collect();
    if !failed.is_empty() {
        return Err(SolverFailure(format!("no solution for {}", failed.join(", "))).into());
    }
    Ok(())
}

fn gen(args: &GenArgs) -> anyhow::Result<()> {
    let inst = generate_synthetic(args.n_employees, args.n_tasks, args.n_skills, args.seed)?;
    io::write_employees(&args.employees, inst.employees())?;
    io::write_tasks(&args.tasks, inst.tasks())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn seeds() {
        assert_eq!(parse_seeds("3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("4,9").unwrap(), vec![4, 9]);
        assert!(parse_seeds("0").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn default_hyperparams() {
        let args = ModelArgs {
            mode: Mode::Cost,
            lambda: None,
            alpha: None,
            beta: None,
            gamma: None,
            no_normalize: false,
            fairness_on_cost: false,
            min_max: false,
        };
        assert_eq!(args.hyperparams().unwrap(), Hyperparams::default());
        let bad = ModelArgs {
            alpha: Some(0.5),
            ..args
        };
        assert!(bad.hyperparams().is_err());
        let loose = ModelArgs {
            no_normalize: true,
            ..bad
        };
        assert!(loose.hyperparams().is_ok());
    }
}
