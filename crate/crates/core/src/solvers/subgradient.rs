use super::{Objective, SolveReport, Termination};
use crate::linalg::DenseVector;

/// Subgradient descent with step `t_k = 1 / (√(k+1) ‖g_k‖)`.
///
/// Runs the full budget of `max_iters` iterations unless the oracle returns a
/// zero subgradient, and reports the best iterate seen rather than the last.
pub fn subgradient_descent<O: Objective + ?Sized>(
    oracle: &O,
    x0: &DenseVector,
    max_iters: usize,
) -> SolveReport {
    let max_iters = max_iters.max(1);
    let mut x = x0.clone();
    let (mut f, mut g) = oracle.evaluate(&x);
    let mut x_best = x.clone();
    let mut f_best = f;
    let mut history = vec![(0, f)];

    for k in 0..max_iters {
        let gnorm = g.norm();
        if gnorm == 0.0 {
            return SolveReport {
                x_best,
                f_best,
                iterations: k,
                converged: true,
                termination: Termination::ZeroSubgradient,
                history,
            };
        }
        let step = 1.0 / (((k + 1) as f64).sqrt() * gnorm);
        x.axpy(-step, &g, 1.0);
        (f, g) = oracle.evaluate(&x);
        history.push((k + 1, f));
        if f < f_best {
            f_best = f;
            x_best.copy_from(&x);
        }
    }
    SolveReport {
        x_best,
        f_best,
        iterations: max_iters,
        converged: false,
        termination: Termination::BudgetSpent,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x: &DenseVector) -> (f64, DenseVector) {
        (x[0] * x[0], DenseVector::from_element(1, 2.0 * x[0]))
    }

    /// (x−1)² + 2|x||x−1| + x², the robust objective for A = D = b = 1.
    fn flat_valley(x: &DenseVector) -> (f64, DenseVector) {
        let v = x[0];
        let sgn = |t: f64| if t >= 0.0 { 1.0 } else { -1.0 };
        let f = (v - 1.0).powi(2) + 2.0 * v.abs() * (v - 1.0).abs() + v * v;
        let g = 2.0 * (v - 1.0) + 2.0 * (sgn(v) * (v - 1.0).abs() + v.abs() * sgn(v - 1.0)) + 2.0 * v;
        (f, DenseVector::from_element(1, g))
    }

    #[test]
    fn quadratic_reaches_small_value() {
        let r = subgradient_descent(&square, &DenseVector::from_element(1, 1.0), 500);
        assert!(r.f_best <= 1e-2, "{}", r.f_best);
        // from x0 = 1 the first unit-length step lands exactly on 0; start elsewhere
        // to exercise the full budget
        let r = subgradient_descent(&square, &DenseVector::from_element(1, 0.7), 500);
        assert!(r.f_best <= 1e-2, "{}", r.f_best);
        assert_eq!(r.iterations, 500);
        assert_eq!(r.termination, Termination::BudgetSpent);
        assert_eq!(r.history.len(), 501);
    }

    #[test]
    fn zero_subgradient_stops_immediately() {
        let r = subgradient_descent(&square, &DenseVector::zeros(1), 100);
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.termination, Termination::ZeroSubgradient);
    }

    #[test]
    fn flat_valley_optimum() {
        let r = subgradient_descent(&flat_valley, &DenseVector::from_element(1, 5.0), 5000);
        assert!((r.f_best - 1.0).abs() < 1e-2, "{}", r.f_best);
    }

    #[test]
    fn best_value_never_increases() {
        let r = subgradient_descent(&flat_valley, &DenseVector::from_element(1, -3.0), 300);
        let mut best = f64::INFINITY;
        for &(_, v) in &r.history {
            best = best.min(v);
        }
        assert_eq!(best, r.f_best);
        assert!(r.f_best <= r.history[0].1);
    }
}
