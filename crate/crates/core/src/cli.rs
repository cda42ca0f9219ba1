//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{self, DebiasResult};
use crate::io::{self, ArtifactKind, Provenance, ReadOptions, ResponseColumn, RunArtifact, Standardization};
use crate::model::Dataset;
use crate::selection::{self, Selection, DEFAULT_P_CAP};
use crate::simulate::{self, SimConfig};
use crate::solver::{self, FitConfig, FitResult, InitStrategy, LambdaFloor, PathConfig, PathPoint};

#[derive(Debug, Parser)]
#[command(name = "betalasso", version, about = "Lasso-penalized Beta regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit at a single penalty level.
    Fit(FitArgs),
    /// Fit along a decreasing grid of penalty levels with warm starts.
    Path(PathArgs),
    /// Debiased estimates and confidence intervals.
    Debias(DebiasArgs),
    /// Monte-Carlo replications on simulated data.
    Simulate(SimulateArgs),
    /// Exhaustive AIC subset selection.
    Select(SelectArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
struct DataArgs {
    /// Delimited text file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Response column, by header name or 0-based index.
    #[arg(long)]
    response: String,
    /// Field delimiter; detected from the header when omitted.
    #[arg(long)]
    delimiter: Option<char>,
    /// Center predictors and scale them to unit variance.
    #[arg(long)]
    standardize: bool,
    /// Skip rows with missing cells.
    #[arg(long)]
    drop_missing: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum Init {
    Beta,
    Logistic,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    /// Accepted steps between precision updates.
    #[arg(long = "phi-every", default_value_t = 5)]
    phi_every: usize,
    #[arg(long, value_enum, default_value_t = Init::Logistic)]
    init: Init,
}

impl SolverArgs {
    fn config(&self, lambda: f64) -> FitConfig {
        FitConfig {
            lambda,
            tol: self.tol,
            max_iter: self.max_iter,
            phi_update_every: self.phi_every,
            init_strategy: match self.init {
                Init::Beta => InitStrategy::UnpenalizedBeta,
                Init::Logistic => InitStrategy::PenalizedLogistic,
            },
            ..FitConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
struct LambdaArgs {
    #[arg(long)]
    lambda: Option<f64>,
    /// Use λ = c·√(ln p / n).
    #[arg(long = "lambda-rule")]
    lambda_rule: Option<f64>,
}

fn rate(data: &Dataset) -> f64 {
    ((data.p() as f64).ln() / data.n() as f64).sqrt()
}

impl LambdaArgs {
    fn resolve(&self, data: &Dataset) -> f64 {
        match (self.lambda, self.lambda_rule) {
            (Some(l), _) => l,
            (None, Some(c)) => c * rate(data),
            (None, None) => unreachable!("clap requires one of the two"),
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    lambda: LambdaArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the result artifact here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct PathArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 50)]
    n_lambda: usize,
    /// Absolute lower end of the grid.
    #[arg(long, default_value_t = 1e-4)]
    lambda_min: f64,
    /// Upper end of the grid as a fraction of λ̄.
    #[arg(long = "lambda-max-frac", default_value_t = 0.95)]
    lambda_max_frac: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
struct Lambda0Args {
    #[arg(long)]
    lambda0: Option<f64>,
    /// Use λ0 = c0·√(ln p / n).
    #[arg(long = "lambda0-rule")]
    lambda0_rule: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct DebiasArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    lambda: LambdaArgs,
    #[command(flatten)]
    lambda0: Lambda0Args,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value_t = 4.0)]
    phi: f64,
    #[arg(long, default_value_t = 0.0)]
    beta0: f64,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also compute debiased confidence intervals.
    #[arg(long)]
    ci: bool,
    #[arg(long = "lambda-rule", default_value_t = 0.2)]
    lambda_rule: f64,
    #[arg(long = "lambda0-rule", default_value_t = 0.01)]
    lambda0_rule: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Worker threads (default: BETALASSO_THREADS, else all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the per-replication table here.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Largest number of features to enumerate exhaustively.
    #[arg(long = "max-p", default_value_t = DEFAULT_P_CAP)]
    max_p: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Payload of a `fit` artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    pub fit: FitResult,
    pub feature_names: Option<Vec<String>>,
    pub standardization: Option<Standardization>,
    /// `(β0, β)` on the original predictor scale, when standardized.
    pub original_scale: Option<(f64, Vec<f64>)>,
}

/// Payload of a `path` artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathOutput {
    pub lambda_max: f64,
    pub points: Vec<PathPoint>,
    pub feature_names: Option<Vec<String>>,
    pub standardization: Option<Standardization>,
}

/// Payload of a `debias` artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebiasOutput {
    pub fit: FitResult,
    pub debias: DebiasResult,
    pub feature_names: Option<Vec<String>>,
}

/// Payload of a `select` artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectOutput {
    pub selection: Selection,
    pub feature_names: Option<Vec<String>>,
}

fn load(args: &DataArgs) -> Result<io::LoadedData> {
    let delimiter = match args.delimiter {
        None => None,
        Some(c) if c.is_ascii() => Some(c as u8),
        Some(c) => {
            return Err(Error::Validation(format!(
                "delimiter must be a single ASCII character, got {c:?}"
            )))
        }
    };
    let options = ReadOptions {
        response: args.response.parse::<ResponseColumn>().unwrap_or_else(|e| match e {}),
        delimiter,
        standardize: args.standardize,
        drop_missing: args.drop_missing,
    };
    let loaded = io::read_dataset(&args.data, &options)?;
    if !loaded.dropped_rows.is_empty() {
        eprintln!("dropped {} incomplete rows", loaded.dropped_rows.len());
    }
    Ok(loaded)
}

fn emit<T: Serialize, C: Serialize>(
    kind: ArtifactKind,
    payload: &T,
    config: &C,
    seed: Option<u64>,
    out: Option<&PathBuf>,
) -> Result<()> {
    let Some(path) = out else { return Ok(()) };
    let artifact = RunArtifact::new(kind, payload, Provenance::new(config, seed)?)?;
    io::write_artifact(&artifact, path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn name(names: Option<&[String]>, j: usize) -> String {
    names.map_or_else(|| format!("x{j}"), |n| n[j].clone())
}

fn print_fit(fit: &FitResult, names: Option<&[String]>) {
    println!(
        "lambda = {:.6e}  converged = {}  iterations = {}  kkt = {:.3e}",
        fit.lambda, fit.converged, fit.iterations, fit.kkt_residual
    );
    println!("intercept = {:.6}  phi = {:.6}", fit.params.beta0, fit.params.phi);
    for &j in &fit.active_set {
        println!("  {:<24} {:>12.6}", name(names, j), fit.params.beta[j]);
    }
}

fn run_fit(args: &FitArgs) -> Result<()> {
    let loaded = load(&args.data)?;
    let data = &loaded.dataset;
    let fit = solver::fit(data, &args.solver.config(args.lambda.resolve(data)))?;
    print_fit(&fit, data.feature_names());
    let original_scale = loaded
        .standardization
        .as_ref()
        .map(|s| s.to_original(fit.params.beta0, &fit.params.beta));
    let payload = FitOutput {
        fit,
        feature_names: data.feature_names().map(<[String]>::to_vec),
        standardization: loaded.standardization.clone(),
        original_scale,
    };
    emit(ArtifactKind::Fit, &payload, args, None, args.out.as_ref())
}

fn run_path(args: &PathArgs) -> Result<()> {
    let loaded = load(&args.data)?;
    let data = &loaded.dataset;
    let config = PathConfig {
        n_lambda: args.n_lambda,
        lambda_min: LambdaFloor::Absolute(args.lambda_min),
        lambda_max_fraction: args.lambda_max_frac,
        fit: args.solver.config(0.0),
    };
    let lambda_max = solver::lambda_max(data)?;
    let points = solver::solution_path(data, &config)?;
    println!("lambda_max = {lambda_max:.6e}");
    for pt in &points {
        println!(
            "lambda = {:.6e}  active = {:>3}  converged = {}",
            pt.lambda,
            pt.fit.active_set.len(),
            pt.fit.converged
        );
    }
    let payload = PathOutput {
        lambda_max,
        points,
        feature_names: data.feature_names().map(<[String]>::to_vec),
        standardization: loaded.standardization.clone(),
    };
    emit(ArtifactKind::Path, &payload, args, None, args.out.as_ref())
}

fn run_debias(args: &DebiasArgs) -> Result<()> {
    let loaded = load(&args.data)?;
    let data = &loaded.dataset;
    let fit = solver::fit(data, &args.solver.config(args.lambda.resolve(data)))?;
    let lambda0 = match (args.lambda0.lambda0, args.lambda0.lambda0_rule) {
        (Some(l), _) => l,
        (None, Some(c)) => c * rate(data),
        (None, None) => unreachable!("clap requires one of the two"),
    };
    let db = inference::debias(&fit, data, lambda0, args.alpha)?;
    let names = data.feature_names();
    println!(
        "lambda = {:.6e}  lambda0 = {:.6e}  constraint violation = {:.3e}",
        fit.lambda, db.lambda0, db.omega_constraint_violation
    );
    for j in 0..db.debiased.len() {
        let label = if j == 0 {
            "(intercept)".to_string()
        } else {
            name(names, j - 1)
        };
        let (lo, hi) = db.intervals[j];
        println!(
            "  {label:<24} {:>12.6} {:>12.6}  [{lo:.6}, {hi:.6}]",
            db.estimate[j], db.debiased[j]
        );
    }
    let payload = DebiasOutput {
        fit,
        debias: db,
        feature_names: names.map(<[String]>::to_vec),
    };
    emit(ArtifactKind::Debias, &payload, args, None, args.out.as_ref())
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let config = SimConfig {
        n: args.n,
        p: args.p,
        s_star: args.s,
        phi_star: args.phi,
        beta0_star: args.beta0,
        reps: args.reps,
        seed: args.seed,
        lambda_rule: args.lambda_rule,
        lambda0_rule: args.lambda0_rule,
        alpha: args.alpha,
        run_ci: args.ci,
        threads: args.threads.or_else(io::default_threads),
        timing: false,
    };
    let report = simulate::run_simulation(&config)?;
    let a = &report.aggregates;
    let pct = |s: Option<simulate::Summary>| {
        s.map_or("n/a".to_string(), |s| {
            format!("{:.1} ({:.2})", 100.0 * s.mean, 100.0 * s.se)
        })
    };
    println!(
        "replications = {}  failures = {}",
        report.per_rep.len(),
        report.failures.len()
    );
    println!("CVG = {}  TPR = {}  FPR = {}", pct(a.coverage), pct(a.tpr), pct(a.fpr));
    if let Some(l1) = a.l1_error {
        println!("mean l1 error = {:.4} ({:.4})", l1.mean, l1.se);
    }
    if let Some(path) = &args.table {
        io::write_sim_table(&report, path)?;
        println!("wrote {}", path.display());
    }
    emit(
        ArtifactKind::Sim,
        &report,
        &report.config,
        Some(config.seed),
        args.out.as_ref(),
    )
}

fn run_select(args: &SelectArgs) -> Result<()> {
    let loaded = load(&args.data)?;
    let data = &loaded.dataset;
    let selection = selection::exhaustive_aic(data, args.max_p)?;
    let names = data.feature_names();
    println!(
        "subsets fitted = {}  best AIC = {:.6}",
        selection.visited, selection.best.aic
    );
    for (k, &j) in selection.best.subset.iter().enumerate() {
        println!("  {:<24} {:>12.6}", name(names, j), selection.best.params.beta[k]);
    }
    let payload = SelectOutput {
        selection,
        feature_names: names.map(<[String]>::to_vec),
    };
    emit(ArtifactKind::Select, &payload, args, None, args.out.as_ref())
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code: 0 on success, 1 for invalid input or
/// usage, 2 for numerical failures.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Fit(a) => run_fit(a),
        Command::Path(a) => run_path(a),
        Command::Debias(a) => run_debias(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Select(a) => run_select(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
