use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::linspace;

/// Gaussian kernel density estimate evaluated on an even grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KdeCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl KdeCurve {
    /// Trapezoid-rule integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }

    /// Grid point with the highest density.
    pub fn mode(&self) -> f64 {
        let i = self
            .density
            .iter()
            .enumerate()
            .fold(0, |best, (i, &d)| if d > self.density[best] { i } else { best });
        self.grid[i]
    }
}

fn mean_and_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Normal-reference bandwidth `1.06 σ̂ N^{-1/5}`.
pub fn normal_reference_bandwidth(samples: &[f64]) -> f64 {
    let (_, sd) = mean_and_std(samples);
    1.06 * sd * (samples.len() as f64).powf(-0.2)
}

/// Density on `grid_points` even points spanning the sample range extended by
/// four bandwidths on each side.
pub fn kde(samples: &[f64], grid_points: usize, bandwidth: Option<f64>) -> Result<KdeCurve> {
    if samples.len() < 2 {
        return Err(Error::DegenerateSample);
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("kde samples"));
    }
    if grid_points < 2 {
        return Err(Error::InvalidArgument("kde needs at least 2 grid points".into()));
    }
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Err(Error::DegenerateSample);
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::InvalidArgument(format!("bandwidth must be > 0, got {h}"))),
        None => normal_reference_bandwidth(samples),
    };
    let grid = linspace(lo - 4.0 * h, hi + 4.0 * h, grid_points);
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * PI).sqrt());
    let density = grid
        .iter()
        .map(|&g| {
            norm * samples
                .iter()
                .map(|&s| {
                    let u = (g - s) / h;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
        })
        .collect();
    Ok(KdeCurve {
        grid,
        density,
        bandwidth: h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::rng_from_seed;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn mode_near_zero_for_jittered_zeros() {
        let samples: Vec<f64> = (0..50).map(|i| 1e-6 * ((i as f64) - 24.5)).collect();
        let curve = kde(&samples, 401, None).unwrap();
        assert!(curve.mode().abs() < 1e-5);
    }

    #[test]
    fn standard_normal_density_at_zero() {
        let mut rng = rng_from_seed(3);
        let samples: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let curve = kde(&samples, 1001, None).unwrap();
        let i0 = curve
            .grid
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap()
            .0;
        let expected = 1.0 / (2.0 * PI).sqrt();
        assert!((curve.density[i0] - expected).abs() < 0.1 * expected);
        assert!((curve.integral() - 1.0).abs() < 0.03);
    }

    #[test]
    fn integrates_to_one_with_wide_grid() {
        let samples = [0.0, 1.0, 1.5, 4.0, -2.0];
        let curve = kde(&samples, 2000, Some(0.5)).unwrap();
        assert!((curve.integral() - 1.0).abs() < 0.03);
        assert!(curve.density.iter().all(|&d| d >= 0.0));
        assert!(curve.grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn degenerate_samples_rejected() {
        assert_eq!(kde(&[1.0, 1.0, 1.0], 10, None), Err(Error::DegenerateSample));
        assert_eq!(kde(&[1.0], 10, None), Err(Error::DegenerateSample));
    }
}
