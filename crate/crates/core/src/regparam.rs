//! Regularization parameter selection for ridge-type estimators: generalized
//! cross validation and the discrepancy principle with a χ² noise target.
//!
//! Both criteria only need the ridge residual and the trace of the influence
//! matrix as functions of `λ`. With the thin SVD `A = U Σ Vᵀ`, `β = Uᵀb`:
//!
//! ```text
//! ‖A x̂_λ − b‖² = ‖b − Uβ‖² + Σ_i (λ² / (σ_i² + λ²))² β_i²
//! trace(I − H_λ) = m − Σ_i σ_i² / (σ_i² + λ²)
//! ```

use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::linalg::{svd, DenseVector};
use crate::problem::ProblemInstance;

/// CDF of the χ² distribution with `dof` degrees of freedom.
pub fn chi2_cdf(q: f64, dof: u32) -> f64 {
    if q <= 0.0 {
        0.0
    } else {
        gamma_lr(dof as f64 / 2.0, q / 2.0)
    }
}

/// Inverse χ² CDF by bracketing and bisection.
pub fn chi2_quantile(p: f64, dof: u32) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("probability must be in (0, 1), got {p}")));
    }
    if dof == 0 {
        return Err(Error::InvalidArgument("degrees of freedom must be >= 1".into()));
    }
    let mut lo = 0.0;
    let mut hi = dof as f64;
    while chi2_cdf(hi, dof) < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if chi2_cdf(mid, dof) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Squared-residual target for the discrepancy principle,
/// `ρ = σ²·χ²⁻¹(quantile; m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdpTarget {
    pub rho: f64,
    pub quantile: f64,
    pub noise_var: f64,
    pub m: usize,
}

impl MdpTarget {
    pub fn new(noise_var: f64, quantile: f64, m: usize) -> Result<Self> {
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise variance must be > 0, got {noise_var}")));
        }
        let dof = u32::try_from(m).map_err(|_| Error::InvalidArgument("too many rows".into()))?;
        let rho = noise_var * chi2_quantile(quantile, dof)?;
        Ok(Self {
            rho,
            quantile,
            noise_var,
            m,
        })
    }
}

/// Ridge residual and influence trace as closed-form functions of `λ`.
#[derive(Debug, Clone)]
pub struct RidgeSpectrum {
    singular_values: DenseVector,
    projected: DenseVector,
    orthogonal_sq: f64,
    m: usize,
}

impl RidgeSpectrum {
    pub fn new(p: &ProblemInstance) -> Result<Self> {
        let f = svd(p.a())?;
        let projected = f.u.transpose() * p.b();
        let orthogonal_sq = (p.b() - &f.u * &projected).norm_squared();
        Ok(Self {
            singular_values: f.singular_values,
            projected,
            orthogonal_sq,
            m: p.rows(),
        })
    }

    /// `‖A x̂_RR(λ) − b‖²`.
    pub fn residual_sq(&self, lambda: f64) -> f64 {
        let l2 = lambda * lambda;
        self.orthogonal_sq
            + self
                .singular_values
                .iter()
                .zip(self.projected.iter())
                .map(|(&s, &beta)| {
                    let shrink = l2 / (s * s + l2);
                    if shrink.is_nan() {
                        0.0
                    } else {
                        (shrink * beta).powi(2)
                    }
                })
                .sum::<f64>()
    }

    /// `trace(I − H_λ)`.
    pub fn residual_trace(&self, lambda: f64) -> f64 {
        let l2 = lambda * lambda;
        self.m as f64
            - self
                .singular_values
                .iter()
                .map(|&s| {
                    let s2 = s * s;
                    if s2 + l2 == 0.0 {
                        0.0
                    } else {
                        s2 / (s2 + l2)
                    }
                })
                .sum::<f64>()
    }

    /// `m ‖(I − H_λ) b‖² / trace(I − H_λ)²`.
    pub fn gcv(&self, lambda: f64) -> f64 {
        let t = self.residual_trace(lambda);
        self.m as f64 * self.residual_sq(lambda) / (t * t)
    }
}

pub const MDP_MAX_BISECTIONS: usize = 200;
pub const MDP_LAMBDA_CAP: f64 = 1e8;
pub const MDP_REL_TOL: f64 = 1e-8;

/// Discrepancy principle: `λ ≥ 0` with `‖A x̂_RR(λ) − b‖² = ρ`.
pub fn select_lambda_mdp(p: &ProblemInstance, target: &MdpTarget) -> Result<f64> {
    select_lambda_for_residual(p, target.rho)
}

/// Bisection on `λ` for a given squared-residual level `rho`.
pub fn select_lambda_for_residual(p: &ProblemInstance, rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("target residual must be > 0, got {rho}")));
    }
    let spectrum = RidgeSpectrum::new(p)?;
    let tol = MDP_REL_TOL * rho;
    let floor = spectrum.residual_sq(0.0);
    if floor > rho + tol {
        return Err(Error::InfeasibleTarget { rho, floor });
    }
    if (floor - rho).abs() <= tol {
        return Ok(0.0);
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    loop {
        let r = spectrum.residual_sq(hi);
        if (r - rho).abs() <= tol {
            return Ok(hi);
        }
        if r > rho {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > MDP_LAMBDA_CAP {
            return Err(Error::BracketExhausted {
                rho,
                lambda_cap: MDP_LAMBDA_CAP,
            });
        }
    }
    let mut best = hi;
    for _ in 0..MDP_MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let r = spectrum.residual_sq(mid);
        best = mid;
        if (r - rho).abs() <= tol || mid <= lo || mid >= hi {
            break;
        }
        if r < rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// Log-spaced search range for [`select_lambda_gcv`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self {
            min: 1e-6,
            max: 1e2,
            points: 100,
        }
    }
}

impl LambdaGrid {
    pub fn values(&self) -> Vec<f64> {
        let (lmin, lmax) = (self.min.ln(), self.max.ln());
        let last = self.points - 1;
        (0..self.points)
            .map(|i| match i {
                0 => self.min,
                i if i == last => self.max,
                i => (lmin + (lmax - lmin) * i as f64 / last as f64).exp(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcvSelection {
    pub lambda: f64,
    pub value: f64,
    /// The minimum sat at an end of the grid.
    pub at_boundary: bool,
}

const GOLDEN_ITERS: usize = 80;

/// Minimizes the GCV function: grid scan, then golden-section search in
/// `log λ` on the bracket around the best grid point.
pub fn select_lambda_gcv(p: &ProblemInstance, grid: &LambdaGrid) -> Result<GcvSelection> {
    if !(grid.min > 0.0 && grid.max > grid.min) || grid.points < 3 {
        return Err(Error::InvalidArgument(format!("invalid lambda grid {grid:?}")));
    }
    let spectrum = RidgeSpectrum::new(p)?;
    let lambdas = grid.values();
    let values: Vec<f64> = lambdas.iter().map(|&l| spectrum.gcv(l)).collect();
    let best = values
        .iter()
        .enumerate()
        .fold(0usize, |best, (i, &v)| if v < values[best] { i } else { best });
    if best == 0 || best == lambdas.len() - 1 {
        return Ok(GcvSelection {
            lambda: lambdas[best],
            value: values[best],
            at_boundary: true,
        });
    }

    let g = |t: f64| spectrum.gcv(t.exp());
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lambdas[best - 1].ln(), lambdas[best + 1].ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..GOLDEN_ITERS {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    let t = 0.5 * (a + b);
    let (lambda, value) = {
        let v = g(t);
        if v <= values[best] {
            (t.exp(), v)
        } else {
            (lambdas[best], values[best])
        }
    };
    Ok(GcvSelection {
        lambda,
        value,
        at_boundary: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::solve_rr;
    use crate::linalg::DenseMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// χ² CDF by composite Simpson integration of the density.
    fn chi2_cdf_by_quadrature(q: f64, dof: u32) -> f64 {
        let k = dof as f64 / 2.0;
        let log_norm = -k * 2f64.ln() - statrs::function::gamma::ln_gamma(k);
        let pdf = |x: f64| {
            if x <= 0.0 {
                0.0
            } else {
                (log_norm + (k - 1.0) * x.ln() - x / 2.0).exp()
            }
        };
        let n = 20_000;
        let h = q / n as f64;
        let mut sum = pdf(0.0) + pdf(q);
        for i in 1..n {
            sum += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        sum * h / 3.0
    }

    fn random_instance(m: usize, n: usize, seed: u64) -> ProblemInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DenseMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let b = DenseVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        ProblemInstance::new(a, b).unwrap()
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &(p, dof) in &[(0.05, 1), (0.5, 2), (0.95, 30), (0.999, 7), (0.01, 100)] {
            let q = chi2_quantile(p, dof).unwrap();
            assert!((chi2_cdf(q, dof) - p).abs() < 1e-8, "p={p} dof={dof}");
        }
    }

    #[test]
    fn quantile_at_mean_and_exponential_case() {
        let q = chi2_quantile(chi2_cdf(30.0, 30), 30).unwrap();
        assert!((q - 30.0).abs() < 1e-4);
        assert!((chi2_quantile(0.5, 2).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn quantile_95_30_against_quadrature() {
        let q = chi2_quantile(0.95, 30).unwrap();
        assert!((chi2_cdf_by_quadrature(q, 30) - 0.95).abs() < 1e-8);
        assert!((q - 43.77).abs() < 0.01, "{q}");
    }

    #[test]
    fn quantile_monotone() {
        let mut prev = 0.0;
        for i in 1..50 {
            let q = chi2_quantile(i as f64 / 50.0, 10).unwrap();
            assert!(q > prev);
            prev = q;
        }
        let mut prev = 0.0;
        for dof in 1..60 {
            let q = chi2_quantile(0.9, dof).unwrap();
            assert!(q > prev);
            prev = q;
        }
    }

    #[test]
    fn quantile_rejects_bad_input() {
        assert!(chi2_quantile(0.0, 3).is_err());
        assert!(chi2_quantile(1.0, 3).is_err());
        assert!(chi2_quantile(0.5, 0).is_err());
    }

    #[test]
    fn spectrum_residual_matches_direct() {
        let p = random_instance(12, 4, 2);
        let s = RidgeSpectrum::new(&p).unwrap();
        for &l in &[0.0, 0.01, 0.3, 2.0, 50.0] {
            let x = solve_rr(&p, l).unwrap().x_hat;
            let direct = p.residual(&x).norm_squared();
            assert!((s.residual_sq(l) - direct).abs() < 1e-11 * direct);
        }
    }

    #[test]
    fn trace_identity_against_explicit_hat_matrix() {
        for seed in 0..5 {
            let p = random_instance(7, 3, 40 + seed);
            let s = RidgeSpectrum::new(&p).unwrap();
            for &l in &[1e-3, 0.2, 3.0] {
                let a = p.a();
                let mut g = a.transpose() * a;
                for i in 0..3 {
                    g[(i, i)] += l * l;
                }
                let h = a * g.try_inverse().unwrap() * a.transpose();
                let explicit = (DenseMatrix::identity(7, 7) - h).trace();
                assert!((explicit - s.residual_trace(l)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn residual_monotone_in_lambda() {
        let p = random_instance(30, 15, 8);
        let s = RidgeSpectrum::new(&p).unwrap();
        let grid = LambdaGrid { min: 1e-5, max: 1e3, points: 200 }.values();
        for w in grid.windows(2) {
            assert!(s.residual_sq(w[1]) >= s.residual_sq(w[0]) * (1.0 - 1e-14));
        }
    }

    #[test]
    fn mdp_hits_target() {
        let p = random_instance(30, 15, 3);
        let s = RidgeSpectrum::new(&p).unwrap();
        let rho = 0.5 * (s.residual_sq(0.0) + p.b().norm_squared());
        let lambda = select_lambda_for_residual(&p, rho).unwrap();
        let x = solve_rr(&p, lambda).unwrap().x_hat;
        assert!((p.residual(&x).norm_squared() - rho).abs() <= 1e-8 * rho * 1.01);
    }

    #[test]
    fn mdp_left_endpoint() {
        let p = random_instance(10, 3, 5);
        let floor = RidgeSpectrum::new(&p).unwrap().residual_sq(0.0);
        assert_eq!(select_lambda_for_residual(&p, floor).unwrap(), 0.0);
    }

    #[test]
    fn mdp_full_norm_target() {
        let p = random_instance(10, 3, 6);
        let rho = p.b().norm_squared();
        let lambda = select_lambda_for_residual(&p, rho).unwrap();
        let r = RidgeSpectrum::new(&p).unwrap().residual_sq(lambda);
        assert!(lambda > 1.0);
        assert!((r - rho).abs() <= 1e-8 * rho);
    }

    #[test]
    fn mdp_unreachable_target() {
        let p = random_instance(10, 3, 6);
        let rho = 2.0 * p.b().norm_squared();
        assert!(matches!(
            select_lambda_for_residual(&p, rho),
            Err(Error::BracketExhausted { .. })
        ));
    }

    #[test]
    fn mdp_infeasible_target() {
        let p = random_instance(10, 3, 7);
        let floor = RidgeSpectrum::new(&p).unwrap().residual_sq(0.0);
        assert!(matches!(
            select_lambda_for_residual(&p, 0.5 * floor),
            Err(Error::InfeasibleTarget { .. })
        ));
    }

    #[test]
    fn mdp_target_definition() {
        let t = MdpTarget::new(0.02, 0.95, 30).unwrap();
        assert!((t.rho - 0.02 * chi2_quantile(0.95, 30).unwrap()).abs() < 1e-15);
        assert!(MdpTarget::new(0.0, 0.95, 30).is_err());
    }

    #[test]
    fn gcv_boundary_when_rhs_orthogonal_to_range() {
        // columns span e1, e2; b lies along e3, e4 so Aᵀb = 0
        let a = DenseMatrix::from_row_slice(5, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let b = DenseVector::from_vec(vec![0.0, 0.0, 1.0, -2.0, 0.5]);
        let p = ProblemInstance::new(a, b).unwrap();
        let grid = LambdaGrid::default();
        let sel = select_lambda_gcv(&p, &grid).unwrap();
        assert!(sel.at_boundary);
        assert_eq!(sel.lambda, grid.max);
        let s = RidgeSpectrum::new(&p).unwrap();
        let vals: Vec<f64> = grid.values().iter().map(|&l| s.gcv(l)).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn gcv_interior_minimum_is_local_minimizer() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = DenseMatrix::from_fn(30, 15, |_, _| rng.random_range(-1.0..1.0));
            let x = DenseVector::from_fn(15, |_, _| rng.random_range(-1.0..1.0));
            let b = &a * x + DenseVector::from_fn(30, |_, _| rng.random_range(-0.5..0.5));
            let p = ProblemInstance::new(a, b).unwrap();
            let grid = LambdaGrid::default();
            let sel = select_lambda_gcv(&p, &grid).unwrap();
            let s = RidgeSpectrum::new(&p).unwrap();
            assert!((s.gcv(sel.lambda) - sel.value).abs() < 1e-15);
            let vals: Vec<f64> = grid.values().iter().map(|&l| s.gcv(l)).collect();
            let min_grid = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(sel.value <= min_grid);
        }
    }
}
