//! Minimizers for convex functions given a value + subgradient oracle.

mod lbfgs;
mod subgradient;

pub use lbfgs::{quasi_newton, QuasiNewtonOptions};
pub use subgradient::subgradient_descent;

use crate::linalg::DenseVector;

/// Value and subgradient of a convex function.
pub trait Objective {
    fn evaluate(&self, x: &DenseVector) -> (f64, DenseVector);
}

impl<F> Objective for F
where
    F: Fn(&DenseVector) -> (f64, DenseVector),
{
    fn evaluate(&self, x: &DenseVector) -> (f64, DenseVector) {
        self(x)
    }
}

/// Why a solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Termination {
    /// The oracle returned an exactly zero subgradient.
    ZeroSubgradient,
    /// Subgradient norm fell below the relative tolerance.
    GradientTolerance,
    /// The line search could not find a decreasing step above the minimum length;
    /// the usual terminal state at a kink.
    LineSearchStall,
    /// A fixed iteration budget was spent (subgradient descent).
    BudgetSpent,
    /// Iteration cap reached before any convergence test passed.
    MaxItersExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x_best: DenseVector,
    pub f_best: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// `(iteration, value)` at every accepted iterate, starting with `x0`.
    pub history: Vec<(usize, f64)>,
}

impl SolveReport {
    pub fn stalled(&self) -> bool {
        self.termination == Termination::LineSearchStall
    }
}
