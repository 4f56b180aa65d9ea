//! Experiment configuration in flat `key = value` TOML.
//!
//! ```toml
//! m = 30
//! n = 15
//! cond = 100.0
//! snr = 50.0
//! trials = 300
//! round_digits = [1, 2, 3, 6]
//! dist = "cauchy"              # or "spike"
//! methods = ["OLS", "TLS", "RR_GCV", "RR_MDP", "RO", "RRO_GCV", "RRO_MDP"]
//! base_seed = 1
//!
//! # optional
//! quantile = 0.95              # MDP χ² quantile
//! mdp_target = "quantile"      # or "snr_approximation": ρ = 2‖b̄‖²/(3·snr)
//! init = "zero"                # or "random": robust solves start from N(0, I)
//! cauchy_median = 0.0
//! cauchy_scale = 1.0
//! spike_magnitude = 100.0
//! spike_rest_std = 1.0
//! kde_points = 512
//! density_digits = [2]         # digits that get a density CSV (default: all)
//! ```

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use toml::{Table, Value};

use crate::problem::QuantizationSpec;
use crate::simulate::SolutionDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ExperimentMethod {
    #[serde(rename = "OLS")]
    Ols,
    #[serde(rename = "TLS")]
    Tls,
    #[serde(rename = "RR_GCV")]
    RrGcv,
    #[serde(rename = "RR_MDP")]
    RrMdp,
    #[serde(rename = "RO")]
    Ro,
    #[serde(rename = "RRO_GCV")]
    RroGcv,
    #[serde(rename = "RRO_MDP")]
    RroMdp,
}

impl ExperimentMethod {
    pub const ALL: [ExperimentMethod; 7] = [
        Self::Ols,
        Self::Tls,
        Self::RrGcv,
        Self::RrMdp,
        Self::Ro,
        Self::RroGcv,
        Self::RroMdp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Ols => "OLS",
            Self::Tls => "TLS",
            Self::RrGcv => "RR_GCV",
            Self::RrMdp => "RR_MDP",
            Self::Ro => "RO",
            Self::RroGcv => "RRO_GCV",
            Self::RroMdp => "RRO_MDP",
        }
    }

    pub fn uses_gcv(&self) -> bool {
        matches!(self, Self::RrGcv | Self::RroGcv)
    }

    pub fn uses_mdp(&self) -> bool {
        matches!(self, Self::RrMdp | Self::RroMdp)
    }
}

impl fmt::Display for ExperimentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown method {s:?}"))
    }
}

/// How the discrepancy-principle residual target is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MdpTargetRule {
    /// `ρ = σ²·χ²⁻¹(quantile; m)`.
    Quantile,
    /// `ρ = 2‖b̄‖² / (3·snr)`.
    SnrApproximation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InitRule {
    Zero,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub cond: f64,
    pub snr: f64,
    pub trials: usize,
    pub round_digits: Vec<i32>,
    pub dist: SolutionDistribution,
    pub methods: Vec<ExperimentMethod>,
    pub base_seed: u64,
    pub quantile: f64,
    pub mdp_target: MdpTargetRule,
    pub init: InitRule,
    pub kde_points: usize,
    pub density_digits: Option<Vec<i32>>,
}

impl ExperimentConfig {
    /// Cauchy-distributed solutions at the full-size defaults
    /// (30×15, condition 100, SNR 50, 10 000 trials).
    pub fn cauchy_default() -> Self {
        Self {
            m: 30,
            n: 15,
            cond: 100.0,
            snr: 50.0,
            trials: 10_000,
            round_digits: vec![1, 2, 3, 4, 5, 6],
            dist: SolutionDistribution::Cauchy { median: 0.0, scale: 1.0 },
            methods: ExperimentMethod::ALL.to_vec(),
            base_seed: 1,
            quantile: 0.95,
            mdp_target: MdpTargetRule::Quantile,
            init: InitRule::Zero,
            kde_points: 512,
            density_digits: None,
        }
    }

    /// Single ±100 spike plus standard-normal remainder.
    pub fn spike_default() -> Self {
        Self {
            dist: SolutionDistribution::Spike { magnitude: 100.0, rest_std: 1.0 },
            round_digits: vec![2],
            ..Self::cauchy_default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut err = ConfigError::default();
        if self.n < 2 || self.m <= self.n {
            err.invalid("m", format!("need m > n >= 2, got m = {}, n = {}", self.m, self.n));
        }
        if !(self.cond >= 1.0 && self.cond.is_finite()) {
            err.invalid("cond", "must be a finite number >= 1".into());
        }
        if !(self.snr > 0.0 && self.snr.is_finite()) {
            err.invalid("snr", "must be a finite number > 0".into());
        }
        if self.trials == 0 {
            err.invalid("trials", "must be >= 1".into());
        }
        if self.round_digits.is_empty() {
            err.invalid("round_digits", "must be non-empty".into());
        }
        for &d in &self.round_digits {
            if QuantizationSpec::new(d).is_err() {
                err.invalid("round_digits", format!("digit {d} outside [-6, 12]"));
            }
        }
        if self.methods.is_empty() {
            err.invalid("methods", "must be non-empty".into());
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            err.invalid("quantile", "must lie in (0, 1)".into());
        }
        if self.kde_points < 2 {
            err.invalid("kde_points", "must be >= 2".into());
        }
        match self.dist {
            SolutionDistribution::Cauchy { median, scale } => {
                if SolutionDistribution::cauchy(median, scale).is_err() {
                    err.invalid("cauchy_scale", "scale must be > 0".into());
                }
            }
            SolutionDistribution::Spike { magnitude, rest_std } => {
                if SolutionDistribution::spike(magnitude, rest_std).is_err() {
                    err.invalid("spike_magnitude", "magnitude must be nonzero and rest std > 0".into());
                }
            }
        }
        err.into_result()
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError {
            syntax: Some(e.message().to_string()),
            ..Default::default()
        })?;
        let mut reader = KeyReader { table: &table, err: ConfigError::default() };

        let m = reader.required("m", as_usize);
        let n = reader.required("n", as_usize);
        let cond = reader.required("cond", as_f64);
        let snr = reader.required("snr", as_f64);
        let trials = reader.required("trials", as_usize);
        let round_digits = reader.required("round_digits", as_digit_list);
        let dist_name = reader.required("dist", as_string);
        let methods = reader.required("methods", as_method_list);
        let base_seed = reader.required("base_seed", as_u64);
        let quantile = reader.optional("quantile", as_f64).unwrap_or(0.95);
        let mdp_target = reader
            .optional("mdp_target", |v| match as_string(v)?.as_str() {
                "quantile" => Ok(MdpTargetRule::Quantile),
                "snr_approximation" => Ok(MdpTargetRule::SnrApproximation),
                other => Err(format!("expected \"quantile\" or \"snr_approximation\", got {other:?}")),
            })
            .unwrap_or(MdpTargetRule::Quantile);
        let init = reader
            .optional("init", |v| match as_string(v)?.as_str() {
                "zero" => Ok(InitRule::Zero),
                "random" => Ok(InitRule::Random),
                other => Err(format!("expected \"zero\" or \"random\", got {other:?}")),
            })
            .unwrap_or(InitRule::Zero);
        let cauchy_median = reader.optional("cauchy_median", as_f64).unwrap_or(0.0);
        let cauchy_scale = reader.optional("cauchy_scale", as_f64).unwrap_or(1.0);
        let spike_magnitude = reader.optional("spike_magnitude", as_f64).unwrap_or(100.0);
        let spike_rest_std = reader.optional("spike_rest_std", as_f64).unwrap_or(1.0);
        let kde_points = reader.optional("kde_points", as_usize).unwrap_or(512);
        let density_digits = reader.optional("density_digits", as_digit_list);

        let known = [
            "m", "n", "cond", "snr", "trials", "round_digits", "dist", "methods", "base_seed", "quantile",
            "mdp_target", "init", "cauchy_median", "cauchy_scale", "spike_magnitude", "spike_rest_std",
            "kde_points", "density_digits",
        ];
        for key in table.keys() {
            if !known.contains(&key.as_str()) {
                reader.err.unknown.push(key.clone());
            }
        }

        let dist = dist_name.and_then(|name| match name.as_str() {
            "cauchy" => Some(SolutionDistribution::Cauchy { median: cauchy_median, scale: cauchy_scale }),
            "spike" => Some(SolutionDistribution::Spike { magnitude: spike_magnitude, rest_std: spike_rest_std }),
            other => {
                reader.err.invalid("dist", format!("expected \"cauchy\" or \"spike\", got {other:?}"));
                None
            }
        });

        let mut err = reader.err;
        let cfg = match (m, n, cond, snr, trials, round_digits, dist, methods, base_seed) {
            (Some(m), Some(n), Some(cond), Some(snr), Some(trials), Some(round_digits), Some(dist), Some(methods), Some(base_seed))
                if err.is_empty() =>
            {
                Self {
                    m,
                    n,
                    cond,
                    snr,
                    trials,
                    round_digits,
                    dist,
                    methods,
                    base_seed,
                    quantile,
                    mdp_target,
                    init,
                    kde_points,
                    density_digits,
                }
            }
            _ => return Err(err),
        };
        if let Err(e) = cfg.validate() {
            err.invalid.extend(e.invalid);
            return Err(err);
        }
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| crate::Error::Config(e.to_string()))
    }

    pub fn density_digits(&self) -> Vec<i32> {
        self.density_digits.clone().unwrap_or_else(|| self.round_digits.clone())
    }
}

/// Everything wrong with a config, by key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigError {
    pub syntax: Option<String>,
    pub missing: Vec<String>,
    pub unknown: Vec<String>,
    pub invalid: Vec<(String, String)>,
}

impl ConfigError {
    fn invalid(&mut self, key: &str, msg: String) {
        self.invalid.push((key.to_string(), msg));
    }

    fn is_empty(&self) -> bool {
        self.syntax.is_none() && self.missing.is_empty() && self.unknown.is_empty() && self.invalid.is_empty()
    }

    fn into_result(self) -> Result<(), ConfigError> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(self)
        }
    }

    /// Every key named in the error.
    pub fn keys(&self) -> Vec<&str> {
        self.missing
            .iter()
            .chain(self.unknown.iter())
            .map(String::as_str)
            .chain(self.invalid.iter().map(|(k, _)| k.as_str()))
            .collect()
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(s) = &self.syntax {
            parts.push(format!("syntax error: {s}"));
        }
        if !self.missing.is_empty() {
            parts.push(format!("missing keys: {}", self.missing.join(", ")));
        }
        if !self.unknown.is_empty() {
            parts.push(format!("unknown keys: {}", self.unknown.join(", ")));
        }
        for (k, msg) in &self.invalid {
            parts.push(format!("invalid {k}: {msg}"));
        }
        f.write_str(&parts.join("; "))
    }
}

impl std::error::Error for ConfigError {}

struct KeyReader<'a> {
    table: &'a Table,
    err: ConfigError,
}

impl KeyReader<'_> {
    fn required<T>(&mut self, key: &str, conv: impl Fn(&Value) -> Result<T, String>) -> Option<T> {
        match self.table.get(key) {
            None => {
                self.err.missing.push(key.to_string());
                None
            }
            Some(v) => self.convert(key, v, conv),
        }
    }

    fn optional<T>(&mut self, key: &str, conv: impl Fn(&Value) -> Result<T, String>) -> Option<T> {
        let v = self.table.get(key)?;
        self.convert(key, v, conv)
    }

    fn convert<T>(&mut self, key: &str, v: &Value, conv: impl Fn(&Value) -> Result<T, String>) -> Option<T> {
        match conv(v) {
            Ok(t) => Some(t),
            Err(msg) => {
                self.err.invalid(key, msg);
                None
            }
        }
    }
}

fn as_f64(v: &Value) -> Result<f64, String> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(format!("expected a number, got {}", other.type_str())),
    }
}

fn as_i64(v: &Value) -> Result<i64, String> {
    v.as_integer().ok_or_else(|| format!("expected an integer, got {}", v.type_str()))
}

fn as_usize(v: &Value) -> Result<usize, String> {
    let i = as_i64(v)?;
    usize::try_from(i).map_err(|_| format!("expected a non-negative integer, got {i}"))
}

fn as_u64(v: &Value) -> Result<u64, String> {
    let i = as_i64(v)?;
    u64::try_from(i).map_err(|_| format!("expected a non-negative integer, got {i}"))
}

fn as_string(v: &Value) -> Result<String, String> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| format!("expected a string, got {}", v.type_str()))
}

fn as_digit_list(v: &Value) -> Result<Vec<i32>, String> {
    let arr = v.as_array().ok_or_else(|| format!("expected an array, got {}", v.type_str()))?;
    arr.iter()
        .map(|x| {
            let i = as_i64(x)?;
            i32::try_from(i).map_err(|_| format!("digit {i} out of range"))
        })
        .collect()
}

fn as_method_list(v: &Value) -> Result<Vec<ExperimentMethod>, String> {
    let arr = v.as_array().ok_or_else(|| format!("expected an array, got {}", v.type_str()))?;
    let mut methods: Vec<ExperimentMethod> = arr
        .iter()
        .map(|x| as_string(x)?.parse())
        .collect::<Result<_, _>>()?;
    methods.sort();
    methods.dedup();
    Ok(methods)
}
