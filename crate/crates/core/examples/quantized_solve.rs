//! One synthetic instance rounded at several digits: the robust estimate
//! against the baselines, with the uncertainty read off the rounding digit.

use robust_lsq::estimators::{solve_ols, solve_tls};
use robust_lsq::experiments::{generate_instance, ExperimentConfig};
use robust_lsq::problem::{delta_from_round_digit, QuantizationSpec};
use robust_lsq::robust::{solve_ro, RobustSolveOptions};

fn main() -> robust_lsq::Result<()> {
    let cfg = ExperimentConfig::cauchy_default();
    let inst = generate_instance(&cfg, 0)?;
    let err = |x: &robust_lsq::linalg::DenseVector| (x - &inst.x_bar).norm() / inst.x_bar.norm();

    println!("digit  delta     OLS       TLS        RO");
    for digit in 1..=6 {
        let problem = inst.observed(digit)?;
        let spec = QuantizationSpec::new(digit)?;
        let (ro, _) = solve_ro(&problem, &delta_from_round_digit(spec), &RobustSolveOptions::default())?;
        let tls = solve_tls(&problem).map(|r| format!("{:9.4}", err(&r.x_hat))).unwrap_or_else(|e| e.to_string());
        println!(
            "{digit:>5}  {:<8.0e}  {:.4}  {tls}  {:.4}",
            spec.delta(),
            err(&solve_ols(&problem)?.x_hat),
            err(&ro.x_hat)
        );
    }
    Ok(())
}
