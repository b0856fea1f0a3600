//! Command-line interface. [`run`] takes the argument list and output
//! streams so tests can drive it in-process.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use denseinla_core::constraints::{Axis, InteractionPlan};
use denseinla_core::fit::{fit_observed, Approx, FitError, FitEvaluator, FitOptions};
use denseinla_core::schedule::Executor;
use denseinla_core::sim::{random_besag_graph, SimError};
use denseinla_core::stage2::Strategy;

use crate::compare::{compare_model, worked_example, ComparisonSummary, DEFAULT_JITTER};
use crate::pool::{serve, ProcessPool, ThreadPool};
use crate::report::{write_outputs, ConfigEcho, FitReport, RunLog};
use crate::scenario::{graph_files, preset, presets, scenario_files, simulate_preset, DEFAULT_EDGE_PROB, MAX_SIMULATED_DIMENSION};
use crate::spec::{DataError, DataTable, ModelSpec, Problem, SpecError};

pub const EXIT_SPEC: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INFERENCE: i32 = 4;
pub const EXIT_IO: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "denseinla", version, about = "Dense approximate Bayesian inference for latent Gaussian models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model spec to a data file.
    Fit(FitArgs),
    /// Generate a synthetic scenario or a random Besag graph.
    Simulate(SimulateArgs),
    /// Print latent dimension and constraint count of an interaction plan.
    Constraints(ConstraintArgs),
    /// Compare the pseudo-inverse and kriging constraint paths.
    ComparePaths(CompareArgs),
    /// Serve tasks for a process pool (internal).
    #[command(hide = true)]
    Worker(WorkerArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Grid,
    Ccd,
    Eb,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Grid => Strategy::Grid,
            StrategyArg::Ccd => Strategy::Ccd,
            StrategyArg::Eb => Strategy::EmpiricalBayes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ApproxArg {
    Ga,
    Vba,
}

impl From<ApproxArg> for Approx {
    fn from(a: ApproxArg) -> Self {
        match a {
            ApproxArg::Ga => Approx::Gaussian,
            ApproxArg::Vba => Approx::VariationalBayes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PoolArg {
    Thread,
    Process,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    pub spec: PathBuf,
    pub data: PathBuf,
    /// Defaults to ccd with three or more hyperparameters, grid otherwise.
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long, value_enum, default_value = "vba")]
    pub approx: ApproxArg,
    #[arg(long, env = "INLA_PLUS_WORKERS", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: u32,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads_per_worker: u32,
    #[arg(long, value_enum, default_value = "thread")]
    pub pool: PoolArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker executable for `--pool process`; defaults to this program.
    #[arg(long, hide = true)]
    pub worker_exe: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Scenario preset.
    #[arg(long, conflicts_with = "besag_n")]
    pub plan: Option<String>,
    /// Only draw a connected random Besag graph with this many nodes.
    #[arg(long)]
    pub besag_n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "sim")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ConstraintArgs {
    #[arg(long, conflicts_with_all = ["time", "age", "space"])]
    pub plan: Option<String>,
    #[arg(long)]
    pub time: Option<usize>,
    #[arg(long)]
    pub age: Option<usize>,
    #[arg(long)]
    pub space: Option<usize>,
    /// Random-walk order of the time and age effects.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=2))]
    pub order: u64,
    /// Interactions to include: any of ta, ts, sa, tas, or `all`.
    #[arg(long, value_delimiter = ',')]
    pub interactions: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(required_unless_present = "worked_example")]
    pub spec: Option<PathBuf>,
    #[arg(required_unless_present = "worked_example")]
    pub data: Option<PathBuf>,
    /// Use the built-in four-node example instead of files.
    #[arg(long, conflicts_with_all = ["spec", "data"])]
    pub worked_example: bool,
    #[arg(long, default_value_t = DEFAULT_JITTER)]
    pub jitter: f64,
    /// Hyperparameters to compare at; prior modes by default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct WorkerArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "vba")]
    pub approx: ApproxArg,
    #[arg(long)]
    pub socket: PathBuf,
}

/// Failure with its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Inference(#[from] FitError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) | CliError::Usage(_) => EXIT_SPEC,
            CliError::Data(_) => EXIT_DATA,
            CliError::Inference(_) | CliError::Sim(_) => EXIT_INFERENCE,
            CliError::Io { .. } => EXIT_IO,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_SPEC;
            }
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
    };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(&a).map(|out| {
            let _ = writeln!(stdout, "wrote {}", a.out.display());
            let _ = writeln!(stdout, "log marginal likelihood {:.6}", out.report.log_marginal_likelihood);
        }),
        Command::Simulate(a) => cmd_simulate(&a).map(|msg| {
            let _ = writeln!(stdout, "{msg}");
        }),
        Command::Constraints(a) => cmd_constraints(&a).map(|line| {
            let _ = writeln!(stdout, "{line}");
        }),
        Command::ComparePaths(a) => cmd_compare_paths(&a).map(|s| {
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&s).expect("json"));
        }),
        Command::Worker(a) => cmd_worker(&a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Reads and validates the spec, then the data.
pub fn load_problem(spec_path: &Path, data_path: &Path) -> Result<Problem, CliError> {
    let spec = ModelSpec::from_path(spec_path)?;
    let base = spec_path.parent().unwrap_or(Path::new("."));
    let resolved = spec.resolve(base)?;
    let data = DataTable::from_path(data_path)?;
    Ok(resolved.build(&data)?)
}

fn fit_options(strategy: Option<StrategyArg>, approx: ApproxArg) -> FitOptions {
    FitOptions { strategy: strategy.map(Strategy::from), approx: approx.into(), ..FitOptions::default() }
}

/// In-memory outputs of a fit.
pub struct FitOutputs {
    pub report: FitReport,
    pub run: RunLog,
}

impl FitOutputs {
    pub fn files(&self) -> Vec<(&'static str, String)> {
        let mut run = serde_json::to_string_pretty(&self.run).expect("json");
        run.push('\n');
        vec![
            ("report.json", self.report.to_json()),
            ("latent_marginals.csv", self.report.latent_csv()),
            ("hyper_marginals.csv", self.report.hyper_csv()),
            ("run.json", run),
        ]
    }
}

/// Fits without touching the output directory.
pub fn fit_outputs(a: &FitArgs) -> Result<FitOutputs, CliError> {
    let start = Instant::now();
    let problem = load_problem(&a.spec, &a.data)?;
    let opts = fit_options(a.strategy, a.approx);
    let evaluator = FitEvaluator::new(&problem.model, &problem.y, &opts)
        .map_err(|source| FitError { stage: denseinla_core::fit::FitStage::Mode, source })?;
    let workers = a.workers as usize;
    let executor: Box<dyn Executor> = match a.pool {
        PoolArg::Thread => Box::new(
            ThreadPool::with_threads(workers, a.threads_per_worker as usize).map_err(|e| CliError::Usage(e.to_string()))?,
        ),
        PoolArg::Process => {
            let exe = match &a.worker_exe {
                Some(p) => p.clone(),
                None => std::env::current_exe().map_err(io_err("locating worker executable"))?,
            };
            let args: Vec<OsString> = vec![
                "worker".into(),
                "--spec".into(),
                a.spec.clone().into(),
                "--data".into(),
                a.data.clone().into(),
                "--approx".into(),
                approx_name(a.approx).into(),
            ];
            Box::new(ProcessPool::spawn(workers, &exe, &args).map_err(io_err("starting worker processes"))?)
        }
    };
    let mut timings = Vec::new();
    let mut last = Instant::now();
    let result = fit_observed(&problem.model, &problem.y, &opts, executor.as_ref(), &evaluator, &mut |stage| {
        let now = Instant::now();
        timings.push((stage.name().to_owned(), (now - last).as_secs_f64()));
        last = now;
    })?;
    let config = ConfigEcho {
        spec: a.spec.display().to_string(),
        data: a.data.display().to_string(),
        strategy: result.strategy.name().to_owned(),
        approx: result.approx.name().to_owned(),
        seed: a.seed,
        plan_points: result.points.len(),
    };
    let report = FitReport::new(&result, &problem.labels, config);
    let run = RunLog {
        pool: match a.pool {
            PoolArg::Thread => "thread".into(),
            PoolArg::Process => "process".into(),
        },
        workers,
        threads_per_worker: a.threads_per_worker as usize,
        timings,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(FitOutputs { report, run })
}

fn approx_name(a: ApproxArg) -> &'static str {
    match a {
        ApproxArg::Ga => "ga",
        ApproxArg::Vba => "vba",
    }
}

pub fn cmd_fit(a: &FitArgs) -> Result<FitOutputs, CliError> {
    let out = fit_outputs(a)?;
    write_outputs(&a.out, &out.files()).map_err(io_err(format!("writing {}", a.out.display())))?;
    Ok(out)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<String, CliError> {
    if let Some(n) = a.besag_n {
        if n == 0 {
            return Err(CliError::Usage("--besag-n must be positive".into()));
        }
        let g = random_besag_graph(n, DEFAULT_EDGE_PROB, a.seed)?;
        write_outputs(&a.out, &graph_files(&g.graph, a.seed)).map_err(io_err(format!("writing {}", a.out.display())))?;
        return Ok(format!("graph n={n} edges={} attempts={}", g.graph.structure().structural_nonzeros().saturating_sub(n) / 2, g.attempts));
    }
    let name = a.plan.as_deref().unwrap_or("t5_s20");
    let plan = preset(name).ok_or_else(|| unknown_preset(name))?;
    if plan.latent_dimension() > MAX_SIMULATED_DIMENSION {
        return Err(CliError::Usage(format!(
            "preset {name} has latent dimension {}; dense simulation supports up to {MAX_SIMULATED_DIMENSION}",
            plan.latent_dimension()
        )));
    }
    let sim = simulate_preset(name, a.seed)?;
    write_outputs(&a.out, &scenario_files(&sim, name)).map_err(io_err(format!("writing {}", a.out.display())))?;
    Ok(format!(
        "scenario {name} seed={} s={} k={} n={}",
        a.seed,
        plan.latent_dimension(),
        plan.count_constraints(),
        sim.y.len()
    ))
}

fn unknown_preset(name: &str) -> CliError {
    let known: Vec<&str> = presets().into_iter().map(|(n, _)| n).collect();
    CliError::Usage(format!("unknown preset {name:?}; known: {}", known.join(", ")))
}

pub fn cmd_constraints(a: &ConstraintArgs) -> Result<String, CliError> {
    let plan = match &a.plan {
        Some(name) => preset(name).ok_or_else(|| unknown_preset(name))?,
        None => {
            if a.time.is_none() && a.age.is_none() && a.space.is_none() {
                return Err(CliError::Usage("give --plan or at least one of --time, --age, --space".into()));
            }
            let mut plan = InteractionPlan {
                time: a.time.map(|n| Axis::new(n, a.order as usize)),
                age: a.age.map(|n| Axis::new(n, a.order as usize)),
                space: a.space,
                time_age: false,
                time_space: false,
                space_age: false,
                three_way: false,
            };
            for i in &a.interactions {
                match i.as_str() {
                    "ta" => plan.time_age = true,
                    "ts" => plan.time_space = true,
                    "sa" => plan.space_age = true,
                    "tas" => plan.three_way = true,
                    "all" => {
                        plan.time_age = true;
                        plan.time_space = true;
                        plan.space_age = true;
                        plan.three_way = true;
                    }
                    "none" => {}
                    other => return Err(CliError::Usage(format!("unknown interaction {other:?}"))),
                }
            }
            plan
        }
    };
    Ok(format!("s={} k={}", plan.latent_dimension(), plan.count_constraints()))
}

pub fn cmd_compare_paths(a: &CompareArgs) -> Result<ComparisonSummary, CliError> {
    let cmp = if a.worked_example {
        worked_example().compare(a.jitter).map_err(|e| inference(e.into()))?
    } else {
        let (spec, data) = (a.spec.as_ref().expect("required"), a.data.as_ref().expect("required"));
        let problem = load_problem(spec, data)?;
        compare_model(&problem, a.theta.as_deref(), a.jitter).map_err(inference)?
    };
    Ok(ComparisonSummary::from(&cmp))
}

fn inference(source: denseinla_core::InferenceError) -> CliError {
    CliError::Inference(FitError { stage: denseinla_core::fit::FitStage::Integration, source })
}

pub fn cmd_worker(a: &WorkerArgs) -> Result<(), CliError> {
    let problem = load_problem(&a.spec, &a.data)?;
    let opts = fit_options(None, a.approx);
    let evaluator = FitEvaluator::new(&problem.model, &problem.y, &opts)
        .map_err(|source| FitError { stage: denseinla_core::fit::FitStage::Mode, source })?;
    serve(&a.socket, &evaluator).map_err(io_err("serving tasks"))
}
