//! Least squares when the data matrix is only known up to element-wise
//! quantization bounds.
//!
//! The robust estimator minimizes the worst-case residual over every
//! perturbation `Δ` with `|Δ| ≤ D`:
//!
//! ```text
//! min_x  max_{|Δ| ≤ D} ‖(A + Δ)x − b‖²
//! ```
//!
//! The inner maximum has a closed form (see [`robust`]), which makes the outer
//! problem an unconstrained nonsmooth convex minimization handled by the
//! solvers in [`solvers`]. Ordinary, total and ridge least squares are
//! provided as baselines in [`estimators`], ridge parameter selection in
//! [`regparam`], and a seeded Monte-Carlo harness in [`experiments`].
//!
//! ```
//! use robust_lsq::linalg::{DenseMatrix, DenseVector};
//! use robust_lsq::problem::{delta_from_round_digit, ProblemInstance, QuantizationSpec};
//! use robust_lsq::robust::{solve_ro, RobustSolveOptions};
//!
//! let a = DenseMatrix::from_row_slice(4, 2, &[0.54, 0.12, 0.31, 0.88, 0.07, 0.45, 0.99, 0.23]);
//! let b = DenseVector::from_vec(vec![0.3, 0.9, 0.4, 0.8]);
//! let problem = ProblemInstance::new(a, b).unwrap();
//! let set = delta_from_round_digit(QuantizationSpec::new(2).unwrap());
//! let (estimate, _report) = solve_ro(&problem, &set, &RobustSolveOptions::default()).unwrap();
//! assert_eq!(estimate.x_hat.len(), 2);
//! ```

pub mod cli;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod problem;
pub mod regparam;
pub mod robust;
pub mod simulate;
pub mod solvers;

pub use error::{Error, Result};
