//! Command-line front end: `solve`, `experiment` and `oracle`.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::Error;
use crate::estimators::{solve_ols, solve_rr, solve_tls, EstimatorResult};
use crate::experiments::{
    error_densities, run_experiment, summary_table, write_density_csv, write_results_csv, write_trials_csv,
    ExperimentConfig,
};
use crate::io::{read_matrix_file, read_vector_file};
use crate::linalg::DenseVector;
use crate::problem::{delta_from_round_digit, ProblemInstance, QuantizationSpec, UncertaintySet};
use crate::robust::{corner_maximum, eval_f, solve_ro, solve_rro, RobustSolveOptions, RobustSolver};
use crate::solvers::{QuasiNewtonOptions, SolveReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

/// Relative gap above which `oracle` reports a mismatch.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "robust-lsq", version, about = "Robust least squares for quantized data matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem read from CSV files.
    Solve(SolveArgs),
    /// Run a Monte-Carlo experiment from a config file.
    Experiment(ExperimentArgs),
    /// Compare the closed-form worst case against corner enumeration.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Ols,
    Tls,
    Rr,
    Ro,
    Rro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Lbfgs,
    Subgradient,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Data matrix A (CSV, one row per line).
    #[arg(long)]
    matrix: PathBuf,
    /// Observation vector b (one value per line, or a single row).
    #[arg(long)]
    rhs: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Fixed-point bound δ.
    #[arg(long)]
    delta: Option<f64>,
    /// Rounding digit d; shorthand for --delta 0.5e-d.
    #[arg(long, allow_negative_numbers = true)]
    digit: Option<i32>,
    /// Element-wise bound matrix D (CSV).
    #[arg(long = "box", value_name = "D_FILE")]
    box_file: Option<PathBuf>,
    /// Proportional bound p, D = p|A|.
    #[arg(long)]
    proportional: Option<f64>,
    /// Regularization parameter for rr and rro.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum, default_value = "lbfgs")]
    solver: SolverArg,
    /// Iteration budget (default 500 for lbfgs, 5000 for subgradient).
    #[arg(long)]
    max_iters: Option<usize>,
    /// Starting point for ro/rro (defaults to zero).
    #[arg(long)]
    x0: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Also write every per-trial result to trials.csv.
    #[arg(long)]
    dump_trials: bool,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    rhs: PathBuf,
    #[arg(long = "box", value_name = "D_FILE")]
    box_file: PathBuf,
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    json: bool,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonGenericTls { .. }
            | Error::RankDeficient { .. }
            | Error::NotPositiveDefinite
            | Error::NotSymmetric
            | Error::ConvergenceFailure
            | Error::InfeasibleTarget { .. }
            | Error::BracketExhausted { .. }
            | Error::DegenerateSignal
            | Error::DegenerateSample => Failure::Numerical(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Experiment(a) => cmd_experiment(&a, out),
        Command::Oracle(a) => cmd_oracle(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Numerical(msg)) => {
            let _ = writeln!(err, "numerical failure: {msg}");
            EXIT_NUMERICAL
        }
    }
}

fn uncertainty_from(args: &SolveArgs) -> Result<Option<UncertaintySet>, Failure> {
    let given = [
        args.delta.is_some(),
        args.digit.is_some(),
        args.box_file.is_some(),
        args.proportional.is_some(),
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    if given > 1 {
        return Err(Failure::Usage(
            "give exactly one of --delta, --digit, --box, --proportional".into(),
        ));
    }
    let set = if let Some(delta) = args.delta {
        Some(UncertaintySet::fixed_point(delta)?)
    } else if let Some(d) = args.digit {
        Some(delta_from_round_digit(QuantizationSpec::new(d)?))
    } else if let Some(path) = &args.box_file {
        Some(UncertaintySet::boxed(read_matrix_file(path)?)?)
    } else if let Some(p) = args.proportional {
        Some(UncertaintySet::proportional(p)?)
    } else {
        None
    };
    Ok(set)
}

fn describe(set: &UncertaintySet) -> serde_json::Value {
    match set {
        UncertaintySet::FixedPoint { delta } => json!({"kind": "fixed_point", "delta": delta}),
        UncertaintySet::Box { d } => json!({"kind": "box", "rows": d.nrows(), "cols": d.ncols(), "max": d.max()}),
        UncertaintySet::Proportional { p } => json!({"kind": "proportional", "p": p}),
    }
}

fn describe_text(set: &UncertaintySet) -> String {
    match set {
        UncertaintySet::FixedPoint { delta } => format!("fixed_point delta = {delta:?}"),
        UncertaintySet::Box { d } => format!("box {}x{} max = {:?}", d.nrows(), d.ncols(), d.max()),
        UncertaintySet::Proportional { p } => format!("proportional p = {p:?}"),
    }
}

fn opt_real(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_else(|| "-".into())
}

fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let a = read_matrix_file(&args.matrix)?;
    let b = read_vector_file(&args.rhs)?;
    let problem = ProblemInstance::new(a, b)?;
    let set = uncertainty_from(args)?;
    let robust = matches!(args.method, MethodArg::Ro | MethodArg::Rro);
    let ridge_like = matches!(args.method, MethodArg::Rr | MethodArg::Rro);

    if robust && set.is_none() {
        return Err(Failure::Usage(
            "ro and rro need one of --delta, --digit, --box, --proportional".into(),
        ));
    }
    if !robust && set.is_some() {
        return Err(Failure::Usage("uncertainty flags only apply to ro and rro".into()));
    }
    if ridge_like && args.lambda.is_none() {
        return Err(Failure::Usage("rr and rro need --lambda".into()));
    }
    if !ridge_like && args.lambda.is_some() {
        return Err(Failure::Usage("--lambda only applies to rr and rro".into()));
    }
    if !robust && (args.x0.is_some() || args.max_iters.is_some()) {
        return Err(Failure::Usage("--x0 and --max-iters only apply to ro and rro".into()));
    }

    let mut report: Option<SolveReport> = None;
    let result: EstimatorResult = match args.method {
        MethodArg::Ols => solve_ols(&problem)?,
        MethodArg::Tls => solve_tls(&problem)?,
        MethodArg::Rr => solve_rr(&problem, args.lambda.unwrap_or_default())?,
        MethodArg::Ro | MethodArg::Rro => {
            let solver = match args.solver {
                SolverArg::Lbfgs => RobustSolver::QuasiNewton(QuasiNewtonOptions {
                    max_iters: args.max_iters.unwrap_or(QuasiNewtonOptions::default().max_iters),
                    ..Default::default()
                }),
                SolverArg::Subgradient => RobustSolver::Subgradient {
                    max_iters: args.max_iters.unwrap_or(RobustSolver::DEFAULT_SUBGRADIENT_ITERS),
                },
            };
            let x0 = args.x0.as_deref().map(read_vector_file).transpose()?;
            let opts = RobustSolveOptions { solver, x0 };
            let set = set.as_ref().expect("checked above");
            let (res, rep) = if args.method == MethodArg::Ro {
                solve_ro(&problem, set, &opts)?
            } else {
                solve_rro(&problem, set, args.lambda.unwrap_or_default(), &opts)?
            };
            report = Some(rep);
            res
        }
    };

    if args.json {
        let mut obj = json!({
            "method": result.method.as_str(),
            "x_hat": result.x_hat.as_slice(),
            "objective": result.objective_value,
            "lambda": result.lambda,
            "sigma_np1": result.sigma_np1,
            "iterations": result.iterations,
            "uncertainty": set.as_ref().map(describe),
        });
        if let Some(r) = &report {
            obj["converged"] = json!(r.converged);
            obj["termination"] = json!(r.termination);
        }
        writeln!(out, "{obj}")?;
    } else {
        for v in result.x_hat.iter() {
            writeln!(out, "{v:?}")?;
        }
        writeln!(out)?;
        writeln!(out, "method: {}", result.method)?;
        writeln!(out, "objective: {:?}", result.objective_value)?;
        writeln!(out, "lambda: {}", opt_real(result.lambda))?;
        writeln!(out, "sigma_np1: {}", opt_real(result.sigma_np1))?;
        writeln!(
            out,
            "iterations: {}",
            result.iterations.map(|i| i.to_string()).unwrap_or_else(|| "-".into())
        )?;
        if let Some(set) = &set {
            writeln!(out, "uncertainty: {}", describe_text(set))?;
        }
        if let Some(r) = &report {
            writeln!(out, "converged: {} ({:?})", r.converged, r.termination)?;
        }
    }
    Ok(EXIT_OK)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn cmd_experiment(args: &ExperimentArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.base_seed = s;
    }
    cfg.validate().map_err(|e| Failure::Usage(format!("invalid experiment config: {e}")))?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::Usage(format!("{}: {e}", args.out.display())))?;

    let results = run_experiment(&cfg, args.threads.max(1))?;

    let mut w = create(&args.out, "results.csv")?;
    write_results_csv(&mut w, &results.rows)?;
    w.flush()?;
    for digit in cfg.density_digits() {
        if !cfg.round_digits.contains(&digit) {
            continue;
        }
        let curves = error_densities(&results, digit);
        let mut w = create(&args.out, &format!("density_d{digit}.csv"))?;
        write_density_csv(&mut w, &curves)?;
        w.flush()?;
    }
    if args.dump_trials {
        let mut w = create(&args.out, "trials.csv")?;
        write_trials_csv(&mut w, &results)?;
        w.flush()?;
    }
    write!(out, "{}", summary_table(&results.rows))?;
    Ok(EXIT_OK)
}

fn cmd_oracle(args: &OracleArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let a = read_matrix_file(&args.matrix)?;
    let b = read_vector_file(&args.rhs)?;
    let d = read_matrix_file(&args.box_file)?;
    let x: DenseVector = read_vector_file(&args.x)?;
    let problem = ProblemInstance::with_any_shape(a, b)?;
    UncertaintySet::boxed(d.clone())?;
    let brute = corner_maximum(&problem, &d, &x)?;
    let closed = eval_f(&problem, &d, &x)?;
    let difference = (brute.value - closed).abs();
    let relative = if brute.value.abs() > 0.0 {
        difference / brute.value.abs()
    } else {
        difference
    };
    let ok = relative <= ORACLE_TOLERANCE;
    if args.json {
        let corner: Vec<Vec<f64>> = (0..brute.delta.nrows())
            .map(|i| brute.delta.row(i).iter().copied().collect())
            .collect();
        let obj = json!({
            "brute_force": brute.value,
            "closed_form": closed,
            "difference": difference,
            "relative_difference": relative,
            "maximizing_corner": corner,
            "match": ok,
        });
        writeln!(out, "{obj}")?;
    } else {
        writeln!(out, "brute_force: {:?}", brute.value)?;
        writeln!(out, "closed_form: {closed:?}")?;
        writeln!(out, "difference: {difference:?}")?;
        writeln!(out, "relative_difference: {relative:?}")?;
        writeln!(out, "maximizing_corner:")?;
        for i in 0..brute.delta.nrows() {
            let row: Vec<String> = brute.delta.row(i).iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_NUMERICAL })
}
