//! Three noisy points on the zero line: OLS stays near the truth, TLS is
//! thrown far off by its freedom to move the regressors, and the robust fit
//! with hundredths rounding recovers the zero slope.

use robust_lsq::estimators::{solve_ols, solve_tls};
use robust_lsq::linalg::{DenseMatrix, DenseVector};
use robust_lsq::problem::{delta_from_round_digit, ProblemInstance, QuantizationSpec};
use robust_lsq::robust::{solve_ro, RobustSolveOptions};

fn main() -> robust_lsq::Result<()> {
    let a = DenseMatrix::from_column_slice(3, 1, &[-0.10, 0.00, 0.11]);
    let b = DenseVector::from_vec(vec![1.00, -1.00, 1.00]);
    let problem = ProblemInstance::new(a, b)?;

    let ols = solve_ols(&problem)?;
    let tls = solve_tls(&problem)?;
    let set = delta_from_round_digit(QuantizationSpec::new(2)?);
    let (ro, _) = solve_ro(&problem, &set, &RobustSolveOptions::default())?;

    println!("true slope   0");
    println!("OLS slope    {:.4}", ols.x_hat[0]);
    println!("TLS slope    {:.4}  (sigma_n+1 = {:.5})", tls.x_hat[0], tls.sigma_np1.unwrap());
    println!("RO slope     {:.4}  (delta = 0.005)", ro.x_hat[0]);
    Ok(())
}
