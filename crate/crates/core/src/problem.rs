//! Problem instances and element-wise uncertainty sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite_matrix, ensure_finite_vector, svd, DenseMatrix, DenseVector};

/// Relative tolerance on `σ_min / σ_max` below which `A` is rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Observed data matrix `A` (m×n, m > n) and observation vector `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    a: DenseMatrix,
    b: DenseVector,
}

impl ProblemInstance {
    pub fn new(a: DenseMatrix, b: DenseVector) -> Result<Self> {
        if a.nrows() <= a.ncols() || a.ncols() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "expected an overdetermined matrix with m > n >= 1, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        Self::with_any_shape(a, b)
    }

    /// Skips the `m > n` check. Square systems are useful for closed-form
    /// checks of the estimators.
    pub(crate) fn with_any_shape(a: DenseMatrix, b: DenseVector) -> Result<Self> {
        if b.len() != a.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "matrix has {} rows but rhs has length {}",
                a.nrows(),
                b.len()
            )));
        }
        ensure_finite_matrix(&a, "data matrix")?;
        ensure_finite_vector(&b, "observation vector")?;
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &DenseVector {
        &self.b
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    pub fn residual(&self, x: &DenseVector) -> DenseVector {
        &self.a * x - &self.b
    }

    /// Checks that `σ_min(A) > 1e-12 · σ_max(A)`.
    pub fn check_full_rank(&self) -> Result<()> {
        let ratio = svd(&self.a)?.rank_ratio();
        if ratio > RANK_TOLERANCE {
            Ok(())
        } else {
            Err(Error::RankDeficient { ratio })
        }
    }
}

/// Box uncertainty set `{Δ : |Δ| ≤ D}` in one of its three descriptions.
#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintySet {
    /// `|Δ_ij| ≤ δ` for every entry (fixed-point rounding).
    FixedPoint { delta: f64 },
    /// `|Δ_ij| ≤ D_ij` for an explicit non-negative matrix.
    Box { d: DenseMatrix },
    /// `|Δ_ij| ≤ p |A_ij|` (floating-point style relative error).
    Proportional { p: f64 },
}

impl UncertaintySet {
    pub fn fixed_point(delta: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be >= 0, got {delta}")));
        }
        Ok(Self::FixedPoint { delta })
    }

    pub fn boxed(d: DenseMatrix) -> Result<Self> {
        ensure_finite_matrix(&d, "uncertainty bound matrix")?;
        if d.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument(
                "uncertainty bound matrix must be element-wise non-negative".into(),
            ));
        }
        Ok(Self::Box { d })
    }

    pub fn proportional(p: f64) -> Result<Self> {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("p must be >= 0, got {p}")));
        }
        Ok(Self::Proportional { p })
    }

    /// Element-wise bound matrix `D` for a data matrix `a`.
    pub fn materialize_box(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            Self::FixedPoint { delta } => Ok(DenseMatrix::from_element(a.nrows(), a.ncols(), *delta)),
            Self::Proportional { p } => Ok(a.map(|v| p * v.abs())),
            Self::Box { d } => {
                if d.shape() != a.shape() {
                    return Err(Error::ShapeMismatch(format!(
                        "bound matrix is {}x{}, data matrix is {}x{}",
                        d.nrows(),
                        d.ncols(),
                        a.nrows(),
                        a.ncols()
                    )));
                }
                Ok(d.clone())
            }
        }
    }
}

/// Decimal place to which a matrix was rounded; digit `d` means a grid of `10^-d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizationSpec {
    round_digit: i32,
}

impl QuantizationSpec {
    pub const MIN_DIGIT: i32 = -6;
    pub const MAX_DIGIT: i32 = 12;

    pub fn new(round_digit: i32) -> Result<Self> {
        if !(Self::MIN_DIGIT..=Self::MAX_DIGIT).contains(&round_digit) {
            return Err(Error::InvalidArgument(format!(
                "round digit {round_digit} outside [{}, {}]",
                Self::MIN_DIGIT,
                Self::MAX_DIGIT
            )));
        }
        Ok(Self { round_digit })
    }

    pub fn round_digit(&self) -> i32 {
        self.round_digit
    }

    /// Grid spacing `10^-d`.
    pub fn step(&self) -> f64 {
        10f64.powi(-self.round_digit)
    }

    /// Half the grid spacing: the largest possible rounding error.
    pub fn delta(&self) -> f64 {
        0.5 * self.step()
    }
}

/// Fixed-point uncertainty implied by rounding to `spec`: `δ = 0.5·10^-d`.
pub fn delta_from_round_digit(spec: QuantizationSpec) -> UncertaintySet {
    UncertaintySet::FixedPoint { delta: spec.delta() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_values() {
        let d = |k| match delta_from_round_digit(QuantizationSpec::new(k).unwrap()) {
            UncertaintySet::FixedPoint { delta } => delta,
            _ => unreachable!(),
        };
        assert!((d(2) - 0.005).abs() < 1e-18);
        assert!((d(4) - 0.5e-4).abs() < 1e-20);
        assert_eq!(d(0), 0.5);
        assert_eq!(d(-1), 5.0);
    }

    #[test]
    fn quantization_digit_bounds() {
        assert!(QuantizationSpec::new(13).is_err());
        assert!(QuantizationSpec::new(-7).is_err());
        assert!(QuantizationSpec::new(12).is_ok());
    }

    #[test]
    fn materialize_fixed_and_proportional() {
        let a = DenseMatrix::from_row_slice(2, 2, &[100.0, -2.0, 0.0, 1.0]);
        let d = UncertaintySet::fixed_point(0.005).unwrap().materialize_box(&a).unwrap();
        assert!(d.iter().all(|&v| v == 0.005));
        let d = UncertaintySet::proportional(0.01).unwrap().materialize_box(&a).unwrap();
        let expected = DenseMatrix::from_row_slice(2, 2, &[1.0, 0.02, 0.0, 0.01]);
        assert!((d - expected).amax() < 1e-15);
    }

    #[test]
    fn materialize_box_passthrough_and_mismatch() {
        let a = DenseMatrix::zeros(2, 2);
        let bound = DenseMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.3, 0.4]);
        let set = UncertaintySet::boxed(bound.clone()).unwrap();
        assert_eq!(set.materialize_box(&a).unwrap(), bound);
        assert!(matches!(
            set.materialize_box(&DenseMatrix::zeros(3, 2)),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn invalid_sets_rejected() {
        assert!(UncertaintySet::fixed_point(-1e-3).is_err());
        assert!(UncertaintySet::proportional(f64::NAN).is_err());
        assert!(UncertaintySet::boxed(DenseMatrix::from_element(1, 1, -0.5)).is_err());
    }

    #[test]
    fn instance_shape_checks() {
        assert!(ProblemInstance::new(DenseMatrix::zeros(2, 2), DenseVector::zeros(2)).is_err());
        assert!(ProblemInstance::new(DenseMatrix::zeros(3, 2), DenseVector::zeros(2)).is_err());
        let mut a = DenseMatrix::zeros(3, 1);
        a[(0, 0)] = f64::INFINITY;
        assert_eq!(
            ProblemInstance::new(a, DenseVector::zeros(3)),
            Err(Error::NonFinite("data matrix"))
        );
    }

    #[test]
    fn rank_check() {
        let a = DenseMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let p = ProblemInstance::new(a, DenseVector::zeros(3)).unwrap();
        assert!(matches!(p.check_full_rank(), Err(Error::RankDeficient { .. })));
        let a = DenseMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let p = ProblemInstance::new(a, DenseVector::zeros(3)).unwrap();
        assert!(p.check_full_rank().is_ok());
    }
}
