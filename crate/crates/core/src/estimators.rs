//! Closed-form baselines: ordinary least squares, total least squares and
//! ridge regression.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{solve_spd, svd, DenseMatrix, DenseVector};
use crate::problem::ProblemInstance;

/// Estimator family that produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Method {
    #[serde(rename = "OLS")]
    Ols,
    #[serde(rename = "TLS")]
    Tls,
    #[serde(rename = "RR")]
    Rr,
    #[serde(rename = "RO")]
    Ro,
    #[serde(rename = "RRO")]
    Rro,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ols => "OLS",
            Method::Tls => "TLS",
            Method::Rr => "RR",
            Method::Ro => "RO",
            Method::Rro => "RRO",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorResult {
    pub x_hat: DenseVector,
    pub method: Method,
    /// Regularization parameter; present for RR and RRO.
    pub lambda: Option<f64>,
    /// Smallest singular value of `[A b]`; present for TLS.
    pub sigma_np1: Option<f64>,
    pub objective_value: f64,
    pub iterations: Option<usize>,
}

fn gram(a: &DenseMatrix) -> DenseMatrix {
    let g = a.transpose() * a;
    // exact symmetry so the Cholesky symmetry check never trips on roundoff
    (&g + g.transpose()) * 0.5
}

fn normal_solve(a: &DenseMatrix, b: &DenseVector, shift: f64) -> Result<DenseVector> {
    let mut g = gram(a);
    for i in 0..g.nrows() {
        g[(i, i)] += shift;
    }
    solve_spd(&g, &(a.transpose() * b))
}

/// `x̂ = (AᵀA)⁻¹Aᵀb`.
pub fn solve_ols(p: &ProblemInstance) -> Result<EstimatorResult> {
    p.check_full_rank()?;
    let x_hat = normal_solve(p.a(), p.b(), 0.0).map_err(|e| match e {
        Error::NotPositiveDefinite => Error::RankDeficient { ratio: 0.0 },
        other => other,
    })?;
    let objective_value = p.residual(&x_hat).norm_squared();
    Ok(EstimatorResult {
        x_hat,
        method: Method::Ols,
        lambda: None,
        sigma_np1: None,
        objective_value,
        iterations: None,
    })
}

/// Smallest singular value of the augmented matrix `[A b]`.
pub fn augmented_sigma_min(p: &ProblemInstance) -> Result<f64> {
    let (m, n) = (p.rows(), p.cols());
    let mut aug = DenseMatrix::zeros(m, n + 1);
    aug.view_mut((0, 0), (m, n)).copy_from(p.a());
    aug.set_column(n, p.b());
    let s = svd(&aug)?.singular_values;
    Ok(s[s.len() - 1])
}

/// `x̂ = (AᵀA − σ²_{n+1} I)⁻¹Aᵀb` where `σ_{n+1}` is the smallest singular
/// value of `[A b]`.
pub fn solve_tls(p: &ProblemInstance) -> Result<EstimatorResult> {
    let s_a = svd(p.a())?.singular_values;
    let ratio = s_a[s_a.len() - 1] / s_a[0];
    if !(ratio > crate::problem::RANK_TOLERANCE) {
        return Err(Error::RankDeficient { ratio });
    }
    let sigma_n = s_a[s_a.len() - 1];
    let sigma_1 = s_a[0];
    let sigma_np1 = augmented_sigma_min(p)?;

    let gap = sigma_n * sigma_n - sigma_np1 * sigma_np1;
    if sigma_np1 >= sigma_n - 1e-12 || gap < 1e-12 * sigma_1 * sigma_1 {
        return Err(Error::NonGenericTls { sigma_np1, sigma_n });
    }
    let x_hat = normal_solve(p.a(), p.b(), -sigma_np1 * sigma_np1).map_err(|e| match e {
        Error::NotPositiveDefinite => Error::NonGenericTls { sigma_np1, sigma_n },
        other => other,
    })?;
    // TLS criterion: ‖Ax − b‖² / (1 + ‖x‖²), which equals σ²_{n+1} at the optimum
    let objective_value = p.residual(&x_hat).norm_squared() / (1.0 + x_hat.norm_squared());
    Ok(EstimatorResult {
        x_hat,
        method: Method::Tls,
        lambda: None,
        sigma_np1: Some(sigma_np1),
        objective_value,
        iterations: None,
    })
}

/// `x̂ = (AᵀA + λ²I)⁻¹Aᵀb`.
pub fn solve_rr(p: &ProblemInstance, lambda: f64) -> Result<EstimatorResult> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        let ols = solve_ols(p)?;
        return Ok(EstimatorResult {
            method: Method::Rr,
            lambda: Some(0.0),
            ..ols
        });
    }
    let x_hat = normal_solve(p.a(), p.b(), lambda * lambda)?;
    let objective_value = p.residual(&x_hat).norm_squared() + lambda * lambda * x_hat.norm_squared();
    Ok(EstimatorResult {
        x_hat,
        method: Method::Rr,
        lambda: Some(lambda),
        sigma_np1: None,
        objective_value,
        iterations: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_d_example() -> ProblemInstance {
        ProblemInstance::new(
            DenseMatrix::from_column_slice(3, 1, &[-0.10, 0.00, 0.11]),
            DenseVector::from_vec(vec![1.0, -1.0, 1.0]),
        )
        .unwrap()
    }

    fn random_instance(m: usize, n: usize, seed: u64) -> ProblemInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DenseMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let b = DenseVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        ProblemInstance::new(a, b).unwrap()
    }

    /// TLS from the right singular vector of `[A b]` belonging to the smallest
    /// singular value.
    fn tls_by_singular_vector(p: &ProblemInstance) -> DenseVector {
        let (m, n) = (p.rows(), p.cols());
        let mut aug = DenseMatrix::zeros(m, n + 1);
        aug.view_mut((0, 0), (m, n)).copy_from(p.a());
        aug.set_column(n, p.b());
        let f = svd(&aug).unwrap();
        let v = f.v.column(n);
        DenseVector::from_fn(n, |i, _| -v[i] / v[n])
    }

    #[test]
    fn one_dimensional_example_slopes() {
        let p = one_d_example();
        let ols = solve_ols(&p).unwrap();
        assert!((ols.x_hat[0] - 0.45).abs() < 0.01, "{}", ols.x_hat[0]);
        let tls = solve_tls(&p).unwrap();
        assert!((tls.x_hat[0] - 297.79).abs() < 0.5, "{}", tls.x_hat[0]);
    }

    #[test]
    fn ols_mean_of_responses() {
        let p = ProblemInstance::new(DenseMatrix::from_element(2, 1, 1.0), DenseVector::from_vec(vec![1.0, 2.0]))
            .unwrap();
        assert!((solve_ols(&p).unwrap().x_hat[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn consistent_system_recovered() {
        let base = random_instance(8, 3, 4);
        let x_bar = DenseVector::from_vec(vec![1.0, -2.0, 0.5]);
        let p = ProblemInstance::new(base.a().clone(), base.a() * &x_bar).unwrap();
        let ols = solve_ols(&p).unwrap();
        assert!((&ols.x_hat - &x_bar).amax() < 1e-10);
        let tls = solve_tls(&p).unwrap();
        assert!(tls.sigma_np1.unwrap() < 1e-12);
        assert!((&tls.x_hat - &x_bar).amax() < 1e-10);
    }

    #[test]
    fn tls_matches_singular_vector_construction() {
        for seed in 0..20 {
            let p = random_instance(6, 2, 50 + seed);
            let tls = solve_tls(&p).unwrap();
            let oracle = tls_by_singular_vector(&p);
            let err = (&tls.x_hat - &oracle).norm() / oracle.norm();
            assert!(err < 1e-8, "seed {seed}: {err}");
        }
    }

    #[test]
    fn tls_interlacing_and_objective() {
        for seed in 0..20 {
            let p = random_instance(7, 3, 300 + seed);
            let s = svd(p.a()).unwrap().singular_values;
            let sig = augmented_sigma_min(&p).unwrap();
            assert!(sig <= s[2] + 1e-12);
            if let Ok(t) = solve_tls(&p) {
                assert!((t.objective_value - sig * sig).abs() < 1e-9 * (1.0 + sig * sig));
            }
        }
    }

    #[test]
    fn tls_non_generic_reported() {
        // b is orthogonal to range(A) and larger than σ_n(A): σ_{n+1}([A b]) = σ_n(A)
        let a = DenseMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let b = DenseVector::from_vec(vec![0.0, 2.0, 0.0]);
        let p = ProblemInstance::new(a, b).unwrap();
        assert!(matches!(solve_tls(&p), Err(Error::NonGenericTls { .. })));
    }

    #[test]
    fn ols_orthogonal_residual() {
        for seed in 0..10 {
            let p = random_instance(30, 15, seed);
            let x = solve_ols(&p).unwrap().x_hat;
            let grad = p.a().transpose() * p.residual(&x);
            assert!(grad.norm() <= 1e-8 * (p.a().transpose() * p.b()).norm());
        }
    }

    #[test]
    fn ols_rank_deficient() {
        let a = DenseMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let p = ProblemInstance::new(a, DenseVector::from_vec(vec![1.0, 0.0, 1.0])).unwrap();
        assert!(matches!(solve_ols(&p), Err(Error::RankDeficient { .. })));
        assert!(matches!(solve_rr(&p, 0.0), Err(Error::RankDeficient { .. })));
        assert!(solve_rr(&p, 0.5).is_ok());
    }

    #[test]
    fn ridge_reduces_to_ols() {
        let p = random_instance(12, 4, 7);
        let ols = solve_ols(&p).unwrap();
        let rr = solve_rr(&p, 0.0).unwrap();
        assert!((&ols.x_hat - &rr.x_hat).amax() < 1e-10);
        assert_eq!(rr.lambda, Some(0.0));
        assert_eq!(rr.method, Method::Rr);
    }

    #[test]
    fn ridge_identity_closed_form() {
        let b = DenseVector::from_vec(vec![3.0, -1.0, 0.5]);
        let p = ProblemInstance::with_any_shape(DenseMatrix::identity(3, 3), b.clone()).unwrap();
        for &lambda in &[0.1, 1.0, 3.0] {
            let x = solve_rr(&p, lambda).unwrap().x_hat;
            assert!((x - &b / (1.0 + lambda * lambda)).amax() < 1e-14);
        }
    }

    #[test]
    fn ridge_vanishes_for_large_lambda() {
        let p = random_instance(10, 3, 11);
        let lambda = 1e6;
        let x = solve_rr(&p, lambda).unwrap().x_hat;
        assert!(x.norm() <= (p.a().transpose() * p.b()).norm() / (lambda * lambda));
    }

    #[test]
    fn ridge_shrinkage_monotone() {
        let p = random_instance(20, 6, 13);
        let mut prev = f64::INFINITY;
        for k in 0..40 {
            let lambda = 1e-4 * 1.5f64.powi(k);
            let norm = solve_rr(&p, lambda).unwrap().x_hat.norm();
            assert!(norm <= prev * (1.0 + 1e-12));
            prev = norm;
        }
    }

    #[test]
    fn ridge_rejects_negative_lambda() {
        let p = random_instance(5, 2, 1);
        assert!(matches!(solve_rr(&p, -1.0), Err(Error::InvalidArgument(_))));
    }
}
