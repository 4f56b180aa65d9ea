//! Synthetic instance generation: conditioned matrices, solution vectors,
//! SNR-calibrated noise and decimal quantization.
//!
//! All randomness flows through an explicit generator. The harness uses
//! [`SimRng`] (ChaCha8, whose output stream is specified and
//! platform-independent) seeded per trial by [`trial_seed`].

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{linspace, svd, DenseMatrix, DenseVector};
use crate::problem::QuantizationSpec;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for trial `index` of a run with `base_seed`.
pub fn trial_seed(base_seed: u64, index: u64) -> u64 {
    mix64(mix64(base_seed) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Standard normal `m×n` matrix with its singular values replaced by `n`
/// values decaying linearly from 1 to `1/cond`. Entries are drawn in
/// row-major order.
pub fn make_conditioned_matrix<R: Rng + ?Sized>(m: usize, n: usize, cond: f64, rng: &mut R) -> Result<DenseMatrix> {
    if !(m > n && n >= 2) {
        return Err(Error::InvalidArgument(format!("need m > n >= 2, got {m}x{n}")));
    }
    if !(cond >= 1.0 && cond.is_finite()) {
        return Err(Error::InvalidArgument(format!("condition number must be >= 1, got {cond}")));
    }
    let mut raw = DenseMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            raw[(i, j)] = normal(rng);
        }
    }
    let f = svd(&raw)?;
    let target = DenseVector::from_vec(linspace(1.0, 1.0 / cond, n));
    Ok(&f.u * DenseMatrix::from_diagonal(&target) * f.v.transpose())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SolutionDistribution {
    /// i.i.d. Cauchy components.
    Cauchy { median: f64, scale: f64 },
    /// First component `±magnitude` with a fair-coin sign, the rest
    /// i.i.d. `N(0, rest_std²)`.
    Spike { magnitude: f64, rest_std: f64 },
}

impl SolutionDistribution {
    pub fn cauchy(median: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && median.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid Cauchy parameters ({median}, {scale})")));
        }
        Ok(Self::Cauchy { median, scale })
    }

    pub fn spike(magnitude: f64, rest_std: f64) -> Result<Self> {
        if !(magnitude != 0.0 && magnitude.is_finite() && rest_std > 0.0 && rest_std.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid spike parameters ({magnitude}, {rest_std})")));
        }
        Ok(Self::Spike { magnitude, rest_std })
    }

    pub fn is_spike(&self) -> bool {
        matches!(self, Self::Spike { .. })
    }
}

pub fn draw_solution<R: Rng + ?Sized>(dist: &SolutionDistribution, n: usize, rng: &mut R) -> Result<DenseVector> {
    match *dist {
        SolutionDistribution::Cauchy { median, scale } => Ok(DenseVector::from_iterator(
            n,
            (0..n).map(|_| {
                let u: f64 = rng.random();
                median + scale * (std::f64::consts::PI * (u - 0.5)).tan()
            }),
        )),
        SolutionDistribution::Spike { magnitude, rest_std } => {
            if n < 2 {
                return Err(Error::InvalidArgument("spike solutions need n >= 2".into()));
            }
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let mut x = DenseVector::zeros(n);
            x[0] = sign * magnitude;
            for j in 1..n {
                x[j] = rest_std * normal(rng);
            }
            Ok(x)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub b_bar: DenseVector,
    pub b: DenseVector,
    /// Per-component noise variance `‖b̄‖² / (m·snr)`.
    pub noise_var: f64,
}

/// `b̄ = Āx̄` and `b = b̄ + η` with `η ~ N(0, ‖b̄‖²/(m·snr) I)`.
pub fn make_observation<R: Rng + ?Sized>(
    a_bar: &DenseMatrix,
    x_bar: &DenseVector,
    snr: f64,
    rng: &mut R,
) -> Result<Observation> {
    if a_bar.ncols() != x_bar.len() {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {} columns, solution has length {}",
            a_bar.ncols(),
            x_bar.len()
        )));
    }
    if !(snr > 0.0) {
        return Err(Error::InvalidArgument(format!("snr must be > 0, got {snr}")));
    }
    let b_bar = a_bar * x_bar;
    let signal = b_bar.norm_squared();
    if signal == 0.0 {
        return Err(Error::DegenerateSignal);
    }
    let m = b_bar.len();
    let noise_var = signal / (m as f64 * snr);
    let sd = noise_var.sqrt();
    let b = DenseVector::from_fn(m, |i, _| b_bar[i] + sd * normal(rng));
    Ok(Observation { b_bar, b, noise_var })
}

/// Rounds every entry to the nearest multiple of `10^-d`, ties away from zero.
pub fn quantize(a_bar: &DenseMatrix, spec: QuantizationSpec) -> DenseMatrix {
    let d = spec.round_digit();
    if d >= 0 {
        let scale = 10f64.powi(d);
        a_bar.map(|v| (v * scale).round() / scale)
    } else {
        let step = 10f64.powi(-d);
        a_bar.map(|v| (v / step).round() * step)
    }
}
