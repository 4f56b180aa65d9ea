//! Monte-Carlo comparison of the estimators on quantized synthetic data.
//!
//! Each trial draws `Ā`, `x̄` and `b` from a seed derived from
//! `(base_seed, trial_index)`, so the same instance is reused across rounding
//! digits and results do not depend on execution order or thread count.

mod config;
mod kde;

pub use config::{ConfigError, ExperimentConfig, ExperimentMethod, InitRule, MdpTargetRule};
pub use kde::{kde, normal_reference_bandwidth, KdeCurve};

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{solve_ols, solve_rr, solve_tls};
use crate::io::fmt_real;
use crate::linalg::{DenseMatrix, DenseVector};
use crate::problem::{delta_from_round_digit, ProblemInstance, QuantizationSpec};
use crate::regparam::{select_lambda_for_residual, select_lambda_gcv, LambdaGrid, MdpTarget};
use crate::robust::{solve_ro, solve_rro, RobustOracle, RobustSolveOptions};
use crate::simulate::{
    draw_solution, make_conditioned_matrix, make_observation, quantize, rng_from_seed, trial_seed,
};

const INIT_STREAM: u64 = 0x696e_6974;

/// The unquantized synthetic data of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialInstance {
    pub a_bar: DenseMatrix,
    pub x_bar: DenseVector,
    pub b_bar: DenseVector,
    pub b: DenseVector,
    pub noise_var: f64,
}

impl TrialInstance {
    /// Observed problem after rounding `Ā` to `round_digit`.
    pub fn observed(&self, round_digit: i32) -> Result<ProblemInstance> {
        let spec = QuantizationSpec::new(round_digit)?;
        ProblemInstance::new(quantize(&self.a_bar, spec), self.b.clone())
    }
}

pub fn generate_instance(cfg: &ExperimentConfig, trial_index: usize) -> Result<TrialInstance> {
    let mut rng = rng_from_seed(trial_seed(cfg.base_seed, trial_index as u64));
    let a_bar = make_conditioned_matrix(cfg.m, cfg.n, cfg.cond, &mut rng)?;
    let x_bar = draw_solution(&cfg.dist, cfg.n, &mut rng)?;
    let obs = make_observation(&a_bar, &x_bar, cfg.snr, &mut rng)?;
    Ok(TrialInstance {
        a_bar,
        x_bar,
        b_bar: obs.b_bar,
        b: obs.b,
        noise_var: obs.noise_var,
    })
}

/// Starting point for the robust solves of a trial.
pub fn initial_point(cfg: &ExperimentConfig, trial_index: usize) -> DenseVector {
    match cfg.init {
        InitRule::Zero => DenseVector::zeros(cfg.n),
        InitRule::Random => {
            use rand_distr::{Distribution, StandardNormal};
            let mut rng = rng_from_seed(trial_seed(cfg.base_seed ^ INIT_STREAM, trial_index as u64));
            DenseVector::from_fn(cfg.n, |_, _| StandardNormal.sample(&mut rng))
        }
    }
}

/// Errors of one successful estimate against the true solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSuccess {
    pub relative_error: f64,
    /// `x̂ − x̄`; for spike solutions the first entry is multiplied by
    /// `sign(x̄₁)` so negative values mean shrinkage toward zero.
    pub component_errors: Vec<f64>,
    pub lambda: Option<f64>,
    /// Robust objective at the returned point (RO and RRO only).
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodOutcome {
    pub method: ExperimentMethod,
    pub result: std::result::Result<MethodSuccess, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub round_digit: i32,
    /// One entry per configured method, in method order.
    pub outcomes: Vec<MethodOutcome>,
}

impl TrialRecord {
    pub fn outcome(&self, method: ExperimentMethod) -> Option<&std::result::Result<MethodSuccess, String>> {
        self.outcomes.iter().find(|o| o.method == method).map(|o| &o.result)
    }
}

fn failure_tag(e: &Error) -> String {
    match e {
        Error::NonGenericTls { .. } => "NonGenericTLS".into(),
        Error::RankDeficient { .. } => "RankDeficient".into(),
        Error::InfeasibleTarget { .. } => "InfeasibleTarget".into(),
        Error::BracketExhausted { .. } => "BracketExhausted".into(),
        Error::NotPositiveDefinite => "NotPositiveDefinite".into(),
        other => other.to_string(),
    }
}

fn success(x_hat: &DenseVector, x_bar: &DenseVector, spike: bool, lambda: Option<f64>, objective: Option<f64>) -> MethodSuccess {
    let err = x_hat - x_bar;
    let mut component_errors: Vec<f64> = err.iter().copied().collect();
    if spike {
        component_errors[0] *= x_bar[0].signum();
    }
    MethodSuccess {
        relative_error: err.norm() / x_bar.norm(),
        component_errors,
        lambda,
        objective,
    }
}

/// Solves every configured method on trial `trial_index` at `round_digit`.
pub fn run_trial(cfg: &ExperimentConfig, trial_index: usize, round_digit: i32) -> Result<TrialRecord> {
    let inst = generate_instance(cfg, trial_index)?;
    let problem = inst.observed(round_digit)?;
    let spec = QuantizationSpec::new(round_digit)?;
    let set = delta_from_round_digit(spec);
    let spike = cfg.dist.is_spike();
    let robust_opts = RobustSolveOptions {
        x0: Some(initial_point(cfg, trial_index)),
        ..Default::default()
    };

    let needs_gcv = cfg.methods.iter().any(|m| m.uses_gcv());
    let needs_mdp = cfg.methods.iter().any(|m| m.uses_mdp());
    let gcv_lambda = needs_gcv.then(|| {
        select_lambda_gcv(&problem, &LambdaGrid::default())
            .map(|s| s.lambda)
            .map_err(|e| failure_tag(&e))
    });
    let mdp_lambda = needs_mdp.then(|| {
        let rho = match cfg.mdp_target {
            MdpTargetRule::Quantile => MdpTarget::new(inst.noise_var, cfg.quantile, cfg.m).map(|t| t.rho),
            MdpTargetRule::SnrApproximation => Ok(2.0 * inst.b_bar.norm_squared() / (3.0 * cfg.snr)),
        };
        rho.and_then(|rho| select_lambda_for_residual(&problem, rho))
            .map_err(|e| failure_tag(&e))
    });

    let robust = |lambda: Option<f64>| -> std::result::Result<MethodSuccess, String> {
        let (est, _) = match lambda {
            None => solve_ro(&problem, &set, &robust_opts),
            Some(l) => solve_rro(&problem, &set, l, &robust_opts),
        }
        .map_err(|e| failure_tag(&e))?;
        Ok(success(&est.x_hat, &inst.x_bar, spike, lambda, Some(est.objective_value)))
    };
    let ridge = |lambda: f64| -> std::result::Result<MethodSuccess, String> {
        let est = solve_rr(&problem, lambda).map_err(|e| failure_tag(&e))?;
        Ok(success(&est.x_hat, &inst.x_bar, spike, Some(lambda), None))
    };

    let outcomes = cfg
        .methods
        .iter()
        .map(|&method| {
            let result = match method {
                ExperimentMethod::Ols => solve_ols(&problem)
                    .map(|e| success(&e.x_hat, &inst.x_bar, spike, None, None))
                    .map_err(|e| failure_tag(&e)),
                ExperimentMethod::Tls => solve_tls(&problem)
                    .map(|e| success(&e.x_hat, &inst.x_bar, spike, None, None))
                    .map_err(|e| failure_tag(&e)),
                ExperimentMethod::RrGcv => gcv_lambda.clone().expect("gcv requested").and_then(ridge),
                ExperimentMethod::RrMdp => mdp_lambda.clone().expect("mdp requested").and_then(ridge),
                ExperimentMethod::Ro => robust(None),
                ExperimentMethod::RroGcv => gcv_lambda.clone().expect("gcv requested").and_then(|l| robust(Some(l))),
                ExperimentMethod::RroMdp => mdp_lambda.clone().expect("mdp requested").and_then(|l| robust(Some(l))),
            };
            MethodOutcome { method, result }
        })
        .collect();
    Ok(TrialRecord {
        trial_index,
        round_digit,
        outcomes,
    })
}

/// Robust objective of the observed problem at `x` (used to check solver quality).
pub fn robust_objective(problem: &ProblemInstance, round_digit: i32, x: &DenseVector) -> Result<f64> {
    let set = delta_from_round_digit(QuantizationSpec::new(round_digit)?);
    Ok(RobustOracle::new(problem, &set, 0.0)?.value(x))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub round_digit: i32,
    pub method: ExperimentMethod,
    /// Mean relative error over successful trials (NaN when none succeeded).
    pub mean_rel_error: f64,
    /// Standard error of that mean.
    pub sem: f64,
    pub failures: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    /// Ordered by round digit (config order), then trial index.
    pub records: Vec<TrialRecord>,
    pub rows: Vec<AggregateRow>,
}

fn aggregate(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Vec<AggregateRow> {
    let mut rows = Vec::new();
    for &digit in &cfg.round_digits {
        for &method in &cfg.methods {
            let mut errors = Vec::new();
            let mut failures = 0;
            let mut trials = 0;
            for rec in records.iter().filter(|r| r.round_digit == digit) {
                trials += 1;
                match rec.outcome(method) {
                    Some(Ok(s)) => errors.push(s.relative_error),
                    _ => failures += 1,
                }
            }
            let k = errors.len() as f64;
            let mean = errors.iter().sum::<f64>() / k;
            let sem = if errors.len() >= 2 {
                let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0);
                (var / k).sqrt()
            } else if errors.len() == 1 {
                0.0
            } else {
                f64::NAN
            };
            rows.push(AggregateRow {
                round_digit: digit,
                method,
                mean_rel_error: mean,
                sem,
                failures,
                trials,
            });
        }
    }
    rows
}

/// Runs all trials at all digits on `threads` workers (1 = sequential).
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentResults> {
    cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
    let jobs: Vec<(i32, usize)> = cfg
        .round_digits
        .iter()
        .flat_map(|&d| (0..cfg.trials).map(move |t| (d, t)))
        .collect();
    let records: Vec<TrialRecord> = if threads <= 1 {
        jobs.iter()
            .map(|&(d, t)| run_trial(cfg, t, d))
            .collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| {
            jobs.par_iter()
                .map(|&(d, t)| run_trial(cfg, t, d))
                .collect::<Result<_>>()
        })?
    };
    let rows = aggregate(cfg, &records);
    Ok(ExperimentResults {
        config: cfg.clone(),
        records,
        rows,
    })
}

/// Which components feed a density curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ComponentClass {
    /// The spike component.
    Large,
    /// Every component except the spike.
    Rest,
    /// Every component.
    All,
}

impl ComponentClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Large => "large",
            Self::Rest => "rest",
            Self::All => "all",
        }
    }
}

/// Pooled component errors per `(method, class)` at `round_digit`.
pub fn component_error_samples(
    results: &ExperimentResults,
    round_digit: i32,
) -> BTreeMap<(ExperimentMethod, ComponentClass), Vec<f64>> {
    let spike = results.config.dist.is_spike();
    let mut out: BTreeMap<(ExperimentMethod, ComponentClass), Vec<f64>> = BTreeMap::new();
    for rec in results.records.iter().filter(|r| r.round_digit == round_digit) {
        for o in &rec.outcomes {
            let Ok(s) = &o.result else { continue };
            if spike {
                out.entry((o.method, ComponentClass::Large)).or_default().push(s.component_errors[0]);
                out.entry((o.method, ComponentClass::Rest))
                    .or_default()
                    .extend_from_slice(&s.component_errors[1..]);
            } else {
                out.entry((o.method, ComponentClass::All))
                    .or_default()
                    .extend_from_slice(&s.component_errors);
            }
        }
    }
    out
}

/// Kernel density estimates of the component errors at `round_digit`.
/// Classes whose sample is degenerate are left out.
pub fn error_densities(
    results: &ExperimentResults,
    round_digit: i32,
) -> Vec<(ExperimentMethod, ComponentClass, KdeCurve)> {
    component_error_samples(results, round_digit)
        .into_iter()
        .filter_map(|((method, class), samples)| {
            kde(&samples, results.config.kde_points, None)
                .ok()
                .map(|curve| (method, class, curve))
        })
        .collect()
}

pub fn write_results_csv<W: Write>(mut w: W, rows: &[AggregateRow]) -> Result<()> {
    writeln!(w, "round_digit,method,mean_rel_error,sem,failures,trials")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.round_digit,
            r.method,
            fmt_real(r.mean_rel_error),
            fmt_real(r.sem),
            r.failures,
            r.trials
        )?;
    }
    Ok(())
}

pub fn write_density_csv<W: Write>(mut w: W, curves: &[(ExperimentMethod, ComponentClass, KdeCurve)]) -> Result<()> {
    writeln!(w, "method,component_class,grid,density")?;
    for (method, class, curve) in curves {
        for (g, d) in curve.grid.iter().zip(&curve.density) {
            writeln!(w, "{},{},{},{}", method, class.as_str(), fmt_real(*g), fmt_real(*d))?;
        }
    }
    Ok(())
}

/// One row per `(trial, method)`: status, relative error, λ and component errors.
pub fn write_trials_csv<W: Write>(mut w: W, results: &ExperimentResults) -> Result<()> {
    let n = results.config.n;
    let mut header = String::from("round_digit,trial,method,status,rel_error,lambda");
    for j in 1..=n {
        header.push_str(&format!(",e{j}"));
    }
    writeln!(w, "{header}")?;
    for rec in &results.records {
        for o in &rec.outcomes {
            match &o.result {
                Ok(s) => {
                    let mut line = format!(
                        "{},{},{},ok,{},{}",
                        rec.round_digit,
                        rec.trial_index,
                        o.method,
                        fmt_real(s.relative_error),
                        s.lambda.map(fmt_real).unwrap_or_default()
                    );
                    for e in &s.component_errors {
                        line.push(',');
                        line.push_str(&fmt_real(*e));
                    }
                    writeln!(w, "{line}")?;
                }
                Err(tag) => {
                    let blanks = ",".repeat(n);
                    writeln!(w, "{},{},{},{},,{}", rec.round_digit, rec.trial_index, o.method, tag, blanks)?;
                }
            }
        }
    }
    Ok(())
}

/// Aligned plain-text summary of the aggregate rows.
pub fn summary_table(rows: &[AggregateRow]) -> String {
    let mut out = format!("{:>5}  {:<8} {:>14} {:>12} {:>8}\n", "digit", "method", "mean_rel_err", "sem", "failed");
    for r in rows {
        out.push_str(&format!(
            "{:>5}  {:<8} {:>14.6e} {:>12.3e} {:>8}\n",
            r.round_digit,
            r.method.as_str(),
            r.mean_rel_error,
            r.sem,
            r.failures
        ));
    }
    out
}
