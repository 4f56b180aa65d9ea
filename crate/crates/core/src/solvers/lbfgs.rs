use std::collections::VecDeque;

use super::{Objective, SolveReport, Termination};
use crate::linalg::DenseVector;

const ARMIJO_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;
const MAX_BRACKET_STEPS: usize = 100;
const MIN_STEP: f64 = 1e-14;
const CURVATURE_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiNewtonOptions {
    /// Stop once `‖g‖ ≤ tol · max(1, ‖g(x0)‖)`.
    pub tol: f64,
    pub max_iters: usize,
    /// Number of curvature pairs kept.
    pub memory: usize,
}

impl Default for QuasiNewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 500,
            memory: 100,
        }
    }
}

struct CurvaturePair {
    s: DenseVector,
    y: DenseVector,
    rho: f64,
}

/// `-H g` by the two-loop recursion, with `H₀ = (sᵀy / yᵀy) I` from the
/// newest pair.
fn two_loop(pairs: &VecDeque<CurvaturePair>, g: &DenseVector) -> DenseVector {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(pairs.len());
    for p in pairs.iter().rev() {
        let a = p.rho * p.s.dot(&q);
        q.axpy(-a, &p.y, 1.0);
        alphas.push(a);
    }
    if let Some(last) = pairs.back() {
        q *= last.s.dot(&last.y) / last.y.norm_squared();
    }
    for (p, a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = p.rho * p.y.dot(&q);
        q.axpy(a - b, &p.s, 1.0);
    }
    -q
}

/// Weak Wolfe step by bracketing: double until the curvature condition holds,
/// bisect once an upper bound exists. Falls back to the last step satisfying
/// sufficient decrease when the bracket collapses.
fn weak_wolfe<O: Objective + ?Sized>(
    oracle: &O,
    x: &DenseVector,
    f: f64,
    d: &DenseVector,
    gtd: f64,
    alpha0: f64,
) -> Option<(DenseVector, f64, DenseVector)> {
    let dnorm = d.norm();
    let xscale = x.norm().max(1.0);
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    let mut alpha = alpha0;
    let mut best: Option<(DenseVector, f64, DenseVector)> = None;
    for _ in 0..MAX_BRACKET_STEPS {
        let trial = x + alpha * d;
        let (f_trial, g_trial) = oracle.evaluate(&trial);
        if !(f_trial.is_finite() && f_trial <= f + ARMIJO_C1 * alpha * gtd) {
            hi = alpha;
        } else if g_trial.dot(d) < WOLFE_C2 * gtd {
            lo = alpha;
            best = Some((trial, f_trial, g_trial));
        } else {
            return Some((trial, f_trial, g_trial));
        }
        alpha = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo };
        if (hi - lo) * dnorm < MIN_STEP * xscale {
            break;
        }
    }
    best
}

/// Limited-memory BFGS with a weak Wolfe line search.
///
/// Curvature pairs failing `sᵀy > 0` are skipped. When the line search fails
/// along the quasi-Newton direction the memory is cleared and steepest descent
/// is tried; if that also fails the solve ends as converged with
/// [`Termination::LineSearchStall`].
pub fn quasi_newton<O: Objective + ?Sized>(
    oracle: &O,
    x0: &DenseVector,
    opts: &QuasiNewtonOptions,
) -> SolveReport {
    let memory = opts.memory.max(1);
    let mut x = x0.clone();
    let (mut f, mut g) = oracle.evaluate(&x);
    let mut history = vec![(0, f)];
    let threshold = opts.tol * g.norm().max(1.0);

    let finish = |x: DenseVector, f: f64, iterations, termination, history| SolveReport {
        x_best: x,
        f_best: f,
        iterations,
        converged: termination != Termination::MaxItersExceeded,
        termination,
        history,
    };

    if g.iter().all(|&v| v == 0.0) {
        return finish(x, f, 0, Termination::ZeroSubgradient, history);
    }
    if g.norm() <= threshold {
        return finish(x, f, 0, Termination::GradientTolerance, history);
    }

    let mut pairs: VecDeque<CurvaturePair> = VecDeque::with_capacity(memory);
    for k in 0..opts.max_iters {
        let mut accepted = None;
        // at most two attempts: quasi-Newton direction, then steepest descent
        while accepted.is_none() {
            let steepest = pairs.is_empty();
            let mut d = if steepest { -&g } else { two_loop(&pairs, &g) };
            let mut gtd = g.dot(&d);
            if !(gtd < 0.0) || !gtd.is_finite() {
                pairs.clear();
                d = -&g;
                gtd = -g.norm_squared();
            }
            let alpha0 = if pairs.is_empty() {
                (1.0 / g.lp_norm(1)).min(1.0)
            } else {
                1.0
            };
            accepted = weak_wolfe(oracle, &x, f, &d, gtd, alpha0);
            if accepted.is_none() {
                if pairs.is_empty() {
                    return finish(x, f, k, Termination::LineSearchStall, history);
                }
                pairs.clear();
            }
        }
        let (x_new, f_new, g_new) = accepted.expect("line search accepted a step");
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > CURVATURE_EPS * s.norm() * y.norm() {
            if pairs.len() == memory {
                pairs.pop_front();
            }
            pairs.push_back(CurvaturePair { rho: 1.0 / sy, s, y });
        }
        x = x_new;
        f = f_new;
        g = g_new;
        history.push((k + 1, f));

        if g.iter().all(|&v| v == 0.0) {
            return finish(x, f, k + 1, Termination::ZeroSubgradient, history);
        }
        if g.norm() <= threshold {
            return finish(x, f, k + 1, Termination::GradientTolerance, history);
        }
    }
    finish(x, f, opts.max_iters, Termination::MaxItersExceeded, history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{solve_spd, DenseMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quadratic(g: DenseMatrix, h: DenseVector) -> impl Fn(&DenseVector) -> (f64, DenseVector) {
        move |x| {
            let r = &g * x - &h;
            (r.norm_squared(), 2.0 * g.transpose() * r)
        }
    }

    #[test]
    fn smooth_quadratic_matches_closed_form() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = DenseMatrix::from_fn(8, 5, |i, j| {
                rng.random_range(-0.3..0.3) + if i == j { 2.0 } else { 0.0 }
            });
            let h = DenseVector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
            let exact = solve_spd(&(g.transpose() * &g), &(g.transpose() * &h)).unwrap();
            let oracle = quadratic(g, h);
            let opts = QuasiNewtonOptions { max_iters: 100, ..Default::default() };
            let r = quasi_newton(&oracle, &DenseVector::zeros(5), &opts);
            assert!(r.converged);
            assert!(r.iterations <= 100);
            assert!((&r.x_best - &exact).amax() < 1e-7, "seed {seed}");
        }
    }

    #[test]
    fn nonsmooth_abs_stalls_at_kink() {
        let oracle = |x: &DenseVector| {
            let v = x[0];
            (v.abs() + 0.5 * (v - 0.0).abs(), DenseVector::from_element(1, 1.5 * if v >= 0.0 { 1.0 } else { -1.0 }))
        };
        let r = quasi_newton(&oracle, &DenseVector::from_element(1, 3.0), &QuasiNewtonOptions::default());
        assert!(r.converged);
        assert!(r.x_best[0].abs() < 1e-8, "{}", r.x_best[0]);
        assert!(r.f_best <= r.history[0].1);
    }

    #[test]
    fn never_worse_than_start() {
        let oracle = |x: &DenseVector| {
            let f = x.iter().map(|v| v.abs()).sum::<f64>() + x.norm_squared();
            let g = x.map(|v| if v >= 0.0 { 1.0 } else { -1.0 }) + 2.0 * x;
            (f, g)
        };
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x0 = DenseVector::from_fn(4, |_, _| rng.random_range(-10.0..10.0));
            let r = quasi_newton(&oracle, &x0, &QuasiNewtonOptions::default());
            assert!(r.f_best <= oracle(&x0).0);
            assert!(r.f_best < 1e-6, "seed {seed}: {}", r.f_best);
        }
    }

    #[test]
    fn deterministic_reports() {
        let g = DenseMatrix::from_fn(6, 3, |i, j| ((i * 3 + j) as f64).sin());
        let h = DenseVector::from_fn(6, |i, _| (i as f64).cos());
        let oracle = quadratic(g, h);
        let a = quasi_newton(&oracle, &DenseVector::zeros(3), &QuasiNewtonOptions::default());
        let b = quasi_newton(&oracle, &DenseVector::zeros(3), &QuasiNewtonOptions::default());
        assert_eq!(a, b);
    }

    #[test]
    fn iteration_cap_reported() {
        let g = DenseMatrix::from_diagonal(&DenseVector::from_vec(vec![1.0, 1e-3, 1e3]));
        let oracle = quadratic(g, DenseVector::from_element(3, 1.0));
        let opts = QuasiNewtonOptions { max_iters: 1, tol: 1e-14, memory: 3 };
        let r = quasi_newton(&oracle, &DenseVector::zeros(3), &opts);
        assert!(!r.converged);
        assert_eq!(r.termination, Termination::MaxItersExceeded);
    }
}
