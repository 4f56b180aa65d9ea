//! Dense linear algebra on top of `nalgebra`.
//!
//! Everything downstream works with [`DenseMatrix`] / [`DenseVector`]. The
//! helpers here add the conventions the estimators rely on: sorted singular
//! values, a fixed sign convention for singular vectors, and a Cholesky solve
//! that reports indefiniteness instead of returning garbage.

use nalgebra::{Cholesky, DMatrix, DVector, SVD};

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;
pub type DenseVector = DVector<f64>;

const SVD_MAX_ITERS: usize = 10_000;

/// Thin SVD `A = U diag(s) Vᵀ` with `k = min(m, n)` singular triplets.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub singular_values: DenseVector,
    pub v: DenseMatrix,
}

impl SvdResult {
    pub fn rank_ratio(&self) -> f64 {
        let s = &self.singular_values;
        if s.is_empty() || s[0] == 0.0 {
            0.0
        } else {
            s[s.len() - 1] / s[0]
        }
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        &self.u * DenseMatrix::from_diagonal(&self.singular_values) * self.v.transpose()
    }
}

pub fn ensure_finite_matrix(a: &DenseMatrix, what: &'static str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn ensure_finite_vector(v: &DenseVector, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Thin SVD with non-increasing singular values. Each column of `U` is signed
/// so that its largest-magnitude entry is positive (ties go to the first
/// index), and the matching column of `V` is flipped with it.
pub fn svd(a: &DenseMatrix) -> Result<SvdResult> {
    ensure_finite_matrix(a, "svd input")?;
    let raw = SVD::try_new(a.clone(), true, true, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(Error::ConvergenceFailure)?;
    let u = raw.u.ok_or(Error::ConvergenceFailure)?;
    let v_t = raw.v_t.ok_or(Error::ConvergenceFailure)?;
    let s = raw.singular_values;

    let k = s.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]).then(i.cmp(&j)));

    let mut u_sorted = DenseMatrix::zeros(a.nrows(), k);
    let mut v_sorted = DenseMatrix::zeros(a.ncols(), k);
    let mut s_sorted = DenseVector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        let mut ucol = u.column(src).into_owned();
        let mut vcol = v_t.row(src).transpose();
        let pivot = ucol
            .iter()
            .enumerate()
            .fold((0usize, 0.0f64), |best, (i, &x)| {
                if x.abs() > best.1.abs() {
                    (i, x)
                } else {
                    best
                }
            });
        if pivot.1 < 0.0 {
            ucol.neg_mut();
            vcol.neg_mut();
        }
        u_sorted.set_column(dst, &ucol);
        v_sorted.set_column(dst, &vcol);
        s_sorted[dst] = s[src].max(0.0);
    }
    Ok(SvdResult {
        u: u_sorted,
        singular_values: s_sorted,
        v: v_sorted,
    })
}

/// Solves `M z = y` for symmetric positive definite `M` via Cholesky, with one
/// step of iterative refinement.
pub fn solve_spd(m: &DenseMatrix, y: &DenseVector) -> Result<DenseVector> {
    let n = m.nrows();
    if m.ncols() != n || y.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "solve_spd: matrix {}x{}, rhs {}",
            m.nrows(),
            m.ncols(),
            y.len()
        )));
    }
    ensure_finite_matrix(m, "spd matrix")?;
    ensure_finite_vector(y, "spd rhs")?;
    let scale = m.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::NotSymmetric);
            }
        }
    }
    let chol = Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite)?;
    if chol.l_dirty().diagonal().iter().any(|&d| !(d > 0.0)) {
        return Err(Error::NotPositiveDefinite);
    }
    let mut z = chol.solve(y);
    let residual = y - m * &z;
    z += chol.solve(&residual);
    Ok(z)
}

/// `σ_max / σ_min`, or `+∞` when the smallest singular value is zero.
pub fn condition_number(a: &DenseMatrix) -> Result<f64> {
    let s = svd(a)?.singular_values;
    let smax = s[0];
    let smin = s[s.len() - 1];
    if smin == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(smax / smin)
    }
}

/// `n` evenly spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { end } else { start + step * i as f64 })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
    }

    fn orthonormality_error(q: &DenseMatrix) -> f64 {
        let k = q.ncols();
        (q.transpose() * q - DenseMatrix::identity(k, k)).amax()
    }

    #[test]
    fn identity_singular_values() {
        let s = svd(&DenseMatrix::identity(3, 3)).unwrap().singular_values;
        assert_eq!(s.as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_singular_values_sorted() {
        let a = DenseMatrix::from_diagonal(&DenseVector::from_vec(vec![0.01, 1.0]));
        let s = svd(&a).unwrap().singular_values;
        assert!((s[0] - 1.0).abs() < 1e-15);
        assert!((s[1] - 0.01).abs() < 1e-15);
        assert!((condition_number(&a).unwrap() - 100.0).abs() < 1e-10);
    }

    #[test]
    fn random_svd_reconstructs() {
        for seed in 0..20 {
            let a = random_matrix(5, 3, seed);
            let f = svd(&a).unwrap();
            let err = (f.reconstruct() - &a).norm() / a.norm();
            assert!(err < 1e-8, "seed {seed}: {err}");
            assert!(orthonormality_error(&f.u) < 1e-10);
            assert!(orthonormality_error(&f.v) < 1e-10);
            let s = f.singular_values.as_slice();
            assert!(s.windows(2).all(|w| w[0] >= w[1]) && s.iter().all(|&x| x >= 0.0));
            for j in 0..f.u.ncols() {
                let col = f.u.column(j);
                let imax = col.iamax();
                assert!(col[imax] > 0.0);
            }
        }
    }

    #[test]
    fn wide_matrix_svd() {
        let a = random_matrix(2, 4, 9);
        let f = svd(&a).unwrap();
        assert_eq!(f.singular_values.len(), 2);
        assert!((f.reconstruct() - &a).norm() < 1e-12);
    }

    #[test]
    fn spd_identity_and_scaling() {
        let y = DenseVector::from_vec(vec![3.0, -1.0, 2.5]);
        assert_eq!(solve_spd(&DenseMatrix::identity(3, 3), &y).unwrap(), y);
        let z = solve_spd(
            &(DenseMatrix::identity(2, 2) * 2.0),
            &DenseVector::from_vec(vec![4.0, 6.0]),
        )
        .unwrap();
        assert_eq!(z.as_slice(), &[2.0, 3.0]);
    }

    #[test]
    fn spd_random_residual() {
        for seed in 0..20 {
            let g = random_matrix(6, 6, 100 + seed);
            let m = g.transpose() * &g + DenseMatrix::identity(6, 6);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y = DenseVector::from_fn(6, |_, _| rng.random_range(-5.0..5.0));
            let z = solve_spd(&m, &y).unwrap();
            assert!((&m * &z - &y).norm() <= 1e-10 * y.norm());
        }
    }

    #[test]
    fn spd_rejects_indefinite() {
        let m = DenseMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let y = DenseVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(solve_spd(&m, &y), Err(Error::NotPositiveDefinite));
        let sing = DenseMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(solve_spd(&sing, &y), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn spd_rejects_asymmetric() {
        let m = DenseMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        let y = DenseVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(solve_spd(&m, &y), Err(Error::NotSymmetric));
    }

    #[test]
    fn condition_number_of_singular_matrix_is_infinite() {
        let a = DenseMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(condition_number(&a).unwrap(), f64::INFINITY);
        assert_eq!(condition_number(&DenseMatrix::identity(4, 4)).unwrap(), 1.0);
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(1.0, 0.01, 15);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[14], 0.01);
        assert_eq!(linspace(2.0, 3.0, 1), vec![2.0]);
    }
}
