//! Worst-case residual over a box uncertainty set `{Δ : |Δ| ≤ D}`.
//!
//! For fixed `x` with residual `c = Ax − b`, the inner maximization separates
//! by rows and each row attains `|c_i| + (D|x|)_i`, so
//!
//! ```text
//! f(x) = ‖Ax − b‖² + 2⟨|Ax − b|, D|x|⟩ + ‖D|x|‖²  =  Σ_i (|c_i| + (D|x|)_i)²
//! ```
//!
//! The maximizer is `Δ_x = D ⊙ sign(c) sign(x)ᵀ` and `2(A + Δ_x)ᵀ[(A + Δ_x)x − b]`
//! is a subgradient of `f`. `sign(0)` is taken as `+1` throughout.

use crate::error::{Error, Result};
use crate::estimators::{EstimatorResult, Method};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::problem::{ProblemInstance, UncertaintySet};
use crate::solvers::{quasi_newton, subgradient_descent, Objective, QuasiNewtonOptions, SolveReport};

/// Largest `m·n` accepted by [`corner_maximum`].
pub const CORNER_LIMIT: usize = 20;

#[inline]
fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustEvaluation {
    pub value: f64,
    pub subgrad: DenseVector,
    pub worst_delta: Option<DenseMatrix>,
}

fn check_shapes(p: &ProblemInstance, d: &DenseMatrix, x: &DenseVector) -> Result<()> {
    if d.shape() != p.a().shape() {
        return Err(Error::ShapeMismatch(format!(
            "bound matrix is {}x{}, data matrix is {}x{}",
            d.nrows(),
            d.ncols(),
            p.rows(),
            p.cols()
        )));
    }
    if x.len() != p.cols() {
        return Err(Error::ShapeMismatch(format!(
            "x has length {}, data matrix has {} columns",
            x.len(),
            p.cols()
        )));
    }
    Ok(())
}

/// Value, subgradient and (optionally) the maximizing perturbation in one pass.
pub fn evaluate(
    p: &ProblemInstance,
    d: &DenseMatrix,
    x: &DenseVector,
    with_delta: bool,
) -> Result<RobustEvaluation> {
    check_shapes(p, d, x)?;
    let c = p.residual(x);
    let abs_x = x.abs();
    let spread = d * &abs_x;
    // |c_i| + (D|x|)_i, the attained row magnitudes
    let magnitude = c.abs() + &spread;
    let value = magnitude.norm_squared();

    // (A + Δ_x)x − b = sign(c) ⊙ magnitude; Δ_xᵀ r = sign(x) ⊙ Dᵀ magnitude
    let worst_residual = DenseVector::from_fn(c.len(), |i, _| sign(c[i]) * magnitude[i]);
    let correction = d.transpose() * &magnitude;
    let subgrad = 2.0
        * (p.a().transpose() * &worst_residual
            + DenseVector::from_fn(x.len(), |j, _| sign(x[j]) * correction[j]));

    let worst_delta = with_delta.then(|| {
        DenseMatrix::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)] * sign(c[i]) * sign(x[j]))
    });
    Ok(RobustEvaluation {
        value,
        subgrad,
        worst_delta,
    })
}

/// `f(x) = ‖Ax−b‖² + 2⟨|Ax−b|, D|x|⟩ + ‖D|x|‖²`.
pub fn eval_f(p: &ProblemInstance, d: &DenseMatrix, x: &DenseVector) -> Result<f64> {
    check_shapes(p, d, x)?;
    let c = p.residual(x);
    let spread = d * x.abs();
    Ok(c.norm_squared() + 2.0 * c.abs().dot(&spread) + spread.norm_squared())
}

/// `Δ_x = D ⊙ sign(c) sign(x)ᵀ` with `c = Ax − b`.
pub fn worst_case_delta(p: &ProblemInstance, d: &DenseMatrix, x: &DenseVector) -> Result<DenseMatrix> {
    Ok(evaluate(p, d, x, true)?
        .worst_delta
        .expect("requested worst-case perturbation"))
}

/// `2(A + Δ_x)ᵀ[(A + Δ_x)x − b]`.
pub fn subgradient_f(p: &ProblemInstance, d: &DenseMatrix, x: &DenseVector) -> Result<DenseVector> {
    Ok(evaluate(p, d, x, false)?.subgrad)
}

/// Fixed-point form `‖Ax−b‖² + 2δ‖x‖₁‖Ax−b‖₁ + mδ²‖x‖₁²`.
pub fn eval_f_fixed(p: &ProblemInstance, delta: f64, x: &DenseVector) -> f64 {
    let c = p.residual(x);
    let x1 = x.lp_norm(1);
    let m = p.rows() as f64;
    c.norm_squared() + 2.0 * delta * x1 * c.lp_norm(1) + m * delta * delta * x1 * x1
}

/// Value, `Aᵀ[(A + Δ_x)x − b]` and the unsigned correction `Dᵀ magnitude`.
fn split_box(p: &ProblemInstance, d: &DenseMatrix, x: &DenseVector) -> (f64, DenseVector, DenseVector) {
    let c = p.residual(x);
    let magnitude = c.abs() + d * x.abs();
    let worst_residual = DenseVector::from_fn(c.len(), |i, _| sign(c[i]) * magnitude[i]);
    (
        magnitude.norm_squared(),
        p.a().transpose() * worst_residual,
        d.transpose() * &magnitude,
    )
}

fn split_fixed(p: &ProblemInstance, delta: f64, x: &DenseVector) -> (f64, DenseVector, DenseVector) {
    let c = p.residual(x);
    let x1 = x.lp_norm(1);
    let m = p.rows() as f64;
    let value = c.norm_squared() + 2.0 * delta * x1 * c.lp_norm(1) + m * delta * delta * x1 * x1;
    let worst_residual = c.map(|ci| ci + sign(ci) * delta * x1);
    // Δ_xᵀ r = δ (‖c‖₁ + mδ‖x‖₁) sign(x)
    let weight = delta * (c.lp_norm(1) + m * delta * x1);
    (value, p.a().transpose() * worst_residual, DenseVector::from_element(x.len(), weight))
}

/// `2(smooth + sign(x) ⊙ correction)`, or with `min_norm` the shortest element
/// of the subdifferential interval `2(smooth_j ± correction_j)` wherever `x_j = 0`.
fn assemble(x: &DenseVector, smooth: DenseVector, correction: &DenseVector, min_norm: bool) -> DenseVector {
    DenseVector::from_fn(x.len(), |j, _| {
        let (s, w) = (smooth[j], correction[j]);
        let g = if min_norm && x[j] == 0.0 {
            s.signum() * (s.abs() - w).max(0.0)
        } else {
            s + sign(x[j]) * w
        };
        2.0 * g
    })
}

fn fixed_value_and_subgrad(p: &ProblemInstance, delta: f64, x: &DenseVector) -> (f64, DenseVector) {
    let (value, smooth, correction) = split_fixed(p, delta, x);
    (value, assemble(x, smooth, &correction, false))
}

/// Subgradient of the fixed-point objective, equal to [`subgradient_f`] with
/// `D = δ·11ᵀ`.
pub fn subgradient_fixed(p: &ProblemInstance, delta: f64, x: &DenseVector) -> DenseVector {
    fixed_value_and_subgrad(p, delta, x).1
}

/// Regularized robust objective `f_δ(x) + λ²‖x‖²` and its subgradient.
pub fn eval_rro(p: &ProblemInstance, delta: f64, lambda: f64, x: &DenseVector) -> (f64, DenseVector) {
    let (value, mut subgrad) = fixed_value_and_subgrad(p, delta, x);
    let l2 = lambda * lambda;
    subgrad.axpy(2.0 * l2, x, 1.0);
    (value + l2 * x.norm_squared(), subgrad)
}

/// Result of exhaustive enumeration over the `2^{mn}` corners of the box.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerMaximum {
    pub value: f64,
    pub delta: DenseMatrix,
}

/// `max ‖(A+Δ)x − b‖²` over every `Δ` with `Δ_ij = ±D_ij`, by brute force.
pub fn corner_maximum(p: &ProblemInstance, d: &DenseMatrix, x: &DenseVector) -> Result<CornerMaximum> {
    check_shapes(p, d, x)?;
    let (m, n) = (p.rows(), p.cols());
    let cells = m * n;
    if cells > CORNER_LIMIT {
        return Err(Error::SizeLimit {
            limit: CORNER_LIMIT,
            got: cells,
        });
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_mask = 0u32;
    let mut perturbed = p.a().clone();
    for mask in 0u32..(1u32 << cells) {
        for i in 0..m {
            for j in 0..n {
                let bit = (mask >> (i * n + j)) & 1;
                let s = if bit == 1 { -1.0 } else { 1.0 };
                perturbed[(i, j)] = p.a()[(i, j)] + s * d[(i, j)];
            }
        }
        let value = (&perturbed * x - p.b()).norm_squared();
        if value > best {
            best = value;
            best_mask = mask;
        }
    }
    let delta = DenseMatrix::from_fn(m, n, |i, j| {
        let bit = (best_mask >> (i * n + j)) & 1;
        if bit == 1 {
            -d[(i, j)]
        } else {
            d[(i, j)]
        }
    });
    Ok(CornerMaximum { value: best, delta })
}

/// Oracle for the (optionally regularized) robust objective.
#[derive(Debug, Clone)]
pub struct RobustOracle<'a> {
    problem: &'a ProblemInstance,
    bound: Bound,
    lambda: f64,
}

#[derive(Debug, Clone)]
enum Bound {
    Fixed(f64),
    Matrix(DenseMatrix),
}

impl<'a> RobustOracle<'a> {
    pub fn new(problem: &'a ProblemInstance, set: &UncertaintySet, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
        }
        let bound = match set {
            UncertaintySet::FixedPoint { delta } => Bound::Fixed(*delta),
            other => Bound::Matrix(other.materialize_box(problem.a())?),
        };
        Ok(Self { problem, bound, lambda })
    }

    pub fn value(&self, x: &DenseVector) -> f64 {
        self.evaluate(x).0
    }
}

/// Zero coordinates get the minimum-norm subgradient so that its negative is a
/// descent direction at the kinks of `|x_j|`; in particular `x0 = 0` is never a
/// false stall point.
impl Objective for RobustOracle<'_> {
    fn evaluate(&self, x: &DenseVector) -> (f64, DenseVector) {
        let (value, mut smooth, correction) = match &self.bound {
            Bound::Fixed(delta) => split_fixed(self.problem, *delta, x),
            Bound::Matrix(d) => split_box(self.problem, d, x),
        };
        let l2 = self.lambda * self.lambda;
        smooth.axpy(l2, x, 1.0);
        (value + l2 * x.norm_squared(), assemble(x, smooth, &correction, true))
    }
}

const POLISH_ROUNDS: usize = 4;

impl RobustOracle<'_> {
    fn bound_matrix(&self) -> DenseMatrix {
        match &self.bound {
            Bound::Fixed(delta) => DenseMatrix::from_element(self.problem.rows(), self.problem.cols(), *delta),
            Bound::Matrix(d) => d.clone(),
        }
    }

    /// Minimizer of `f` over the set where the coordinates outside `support`
    /// vanish, the rows in `pinned_rows` have zero residual and every other
    /// sign agrees with `x`. There `f` is a convex quadratic, minimized through
    /// its KKT system. `None` if the system is singular or the minimizer leaves
    /// the pattern.
    fn manifold_minimizer(
        &self,
        d: &DenseMatrix,
        x: &DenseVector,
        c: &DenseVector,
        support: &[usize],
        pinned_rows: &[usize],
    ) -> Option<DenseVector> {
        let p = self.problem;
        let (m, n) = (p.rows(), p.cols());
        let (k, z) = (support.len(), pinned_rows.len());
        let mut pinned = vec![false; m];
        for &i in pinned_rows {
            pinned[i] = true;
        }
        // f as ‖M x_S − q‖² on the pattern
        let mat = DenseMatrix::from_fn(m, k, |i, col| {
            let j = support[col];
            let slope = d[(i, j)] * sign(x[j]);
            if pinned[i] {
                slope
            } else {
                sign(c[i]) * p.a()[(i, j)] + slope
            }
        });
        let q = DenseVector::from_fn(m, |i, _| if pinned[i] { 0.0 } else { sign(c[i]) * p.b()[i] });
        let mut kkt = DenseMatrix::zeros(k + z, k + z);
        let mut gram = mat.transpose() * &mat;
        for t in 0..k {
            gram[(t, t)] += self.lambda * self.lambda;
        }
        kkt.view_mut((0, 0), (k, k)).copy_from(&gram);
        let mut rhs = DenseVector::zeros(k + z);
        rhs.rows_mut(0, k).copy_from(&(mat.transpose() * q));
        for (r, &i) in pinned_rows.iter().enumerate() {
            for (col, &j) in support.iter().enumerate() {
                kkt[(k + r, col)] = p.a()[(i, j)];
                kkt[(col, k + r)] = p.a()[(i, j)];
            }
            rhs[k + r] = p.b()[i];
        }
        let sol = kkt.lu().solve(&rhs)?;
        let mut out = DenseVector::zeros(n);
        for (col, &j) in support.iter().enumerate() {
            if !sol[col].is_finite() || sign(sol[col]) != sign(x[j]) {
                return None;
            }
            out[j] = sol[col];
        }
        let c_new = p.residual(&out);
        (0..m).all(|i| pinned[i] || sign(c_new[i]) == sign(c[i])).then_some(out)
    }

    /// Best of `x` and the pattern minimizers obtained by pinning the
    /// smallest `|x_j|` to zero and the smallest `|c_i|` to zero residual, for
    /// every pair of counts. Repeated while it keeps improving.
    fn polish(&self, x: DenseVector, f: f64) -> (DenseVector, f64) {
        let d = self.bound_matrix();
        let (m, n) = (self.problem.rows(), self.problem.cols());
        let (mut best_x, mut best_f) = (x, f);
        for _ in 0..POLISH_ROUNDS {
            let c = self.problem.residual(&best_x);
            let mut by_x: Vec<usize> = (0..n).collect();
            by_x.sort_by(|&i, &j| best_x[i].abs().total_cmp(&best_x[j].abs()));
            let mut by_c: Vec<usize> = (0..m).collect();
            by_c.sort_by(|&i, &j| c[i].abs().total_cmp(&c[j].abs()));
            let mut improved = false;
            for zeros in 0..n {
                let support = &by_x[zeros..];
                for pinned in 0..=support.len().min(m) {
                    let Some(cand) = self.manifold_minimizer(&d, &best_x, &c, support, &by_c[..pinned]) else {
                        continue;
                    };
                    let fc = self.value(&cand);
                    if fc < best_f {
                        best_x = cand;
                        best_f = fc;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        (best_x, best_f)
    }
}

/// Outer solver for the robust problems.
#[derive(Debug, Clone, PartialEq)]
pub enum RobustSolver {
    QuasiNewton(QuasiNewtonOptions),
    Subgradient { max_iters: usize },
}

impl Default for RobustSolver {
    fn default() -> Self {
        RobustSolver::QuasiNewton(QuasiNewtonOptions::default())
    }
}

impl RobustSolver {
    pub const DEFAULT_SUBGRADIENT_ITERS: usize = 5000;

    pub fn run<O: Objective + ?Sized>(&self, oracle: &O, x0: &DenseVector) -> SolveReport {
        match self {
            RobustSolver::QuasiNewton(opts) => quasi_newton(oracle, x0, opts),
            RobustSolver::Subgradient { max_iters } => subgradient_descent(oracle, x0, *max_iters),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RobustSolveOptions {
    pub solver: RobustSolver,
    /// Starting point; zero when absent.
    pub x0: Option<DenseVector>,
}

fn solve_robust(
    p: &ProblemInstance,
    set: &UncertaintySet,
    lambda: f64,
    opts: &RobustSolveOptions,
) -> Result<(SolveReport, f64)> {
    let oracle = RobustOracle::new(p, set, lambda)?;
    let x0 = match &opts.x0 {
        Some(x0) if x0.len() != p.cols() => {
            return Err(Error::ShapeMismatch(format!(
                "x0 has length {}, expected {}",
                x0.len(),
                p.cols()
            )))
        }
        Some(x0) => x0.clone(),
        None => DenseVector::zeros(p.cols()),
    };
    let mut report = opts.solver.run(&oracle, &x0);
    if matches!(opts.solver, RobustSolver::QuasiNewton(_)) {
        // quasi-Newton settles near a kink; snap onto the active pattern
        let (x, f) = oracle.polish(report.x_best.clone(), report.f_best);
        report.x_best = x;
        report.f_best = f;
    }
    let f = report.f_best;
    Ok((report, f))
}

/// Minimizer of the worst-case residual over `set`.
pub fn solve_ro(p: &ProblemInstance, set: &UncertaintySet, opts: &RobustSolveOptions) -> Result<(EstimatorResult, SolveReport)> {
    let (report, objective_value) = solve_robust(p, set, 0.0, opts)?;
    Ok((
        EstimatorResult {
            x_hat: report.x_best.clone(),
            method: Method::Ro,
            lambda: None,
            sigma_np1: None,
            objective_value,
            iterations: Some(report.iterations),
        },
        report,
    ))
}

/// Minimizer of the worst-case residual plus `λ²‖x‖²`.
pub fn solve_rro(
    p: &ProblemInstance,
    set: &UncertaintySet,
    lambda: f64,
    opts: &RobustSolveOptions,
) -> Result<(EstimatorResult, SolveReport)> {
    let (report, objective_value) = solve_robust(p, set, lambda, opts)?;
    Ok((
        EstimatorResult {
            x_hat: report.x_best.clone(),
            method: Method::Rro,
            lambda: Some(lambda),
            sigma_np1: None,
            objective_value,
            iterations: Some(report.iterations),
        },
        report,
    ))
}
