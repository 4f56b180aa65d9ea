//! Ridge parameter by generalized cross validation and by the discrepancy
//! principle, then the regularized robust estimate at each.

use robust_lsq::estimators::solve_rr;
use robust_lsq::experiments::{generate_instance, ExperimentConfig};
use robust_lsq::regparam::{chi2_quantile, select_lambda_gcv, select_lambda_mdp, LambdaGrid, MdpTarget};
use robust_lsq::problem::UncertaintySet;
use robust_lsq::robust::{solve_rro, RobustSolveOptions};

fn main() -> robust_lsq::Result<()> {
    let cfg = ExperimentConfig::spike_default();
    let inst = generate_instance(&cfg, 0)?;
    let problem = inst.observed(2)?;
    let err = |x: &robust_lsq::linalg::DenseVector| (x - &inst.x_bar).norm() / inst.x_bar.norm();

    let gcv = select_lambda_gcv(&problem, &LambdaGrid::default())?;
    let target = MdpTarget::new(inst.noise_var, 0.95, cfg.m)?;
    let mdp = select_lambda_mdp(&problem, &target)?;
    println!("chi2 95% quantile, 30 dof: {:.4}", chi2_quantile(0.95, 30)?);
    println!("target residual rho:       {:.6}", target.rho);

    let set = UncertaintySet::fixed_point(0.005)?;
    for (name, lambda) in [("GCV", gcv.lambda), ("MDP", mdp)] {
        let rr = solve_rr(&problem, lambda)?;
        let (rro, _) = solve_rro(&problem, &set, lambda, &RobustSolveOptions::default())?;
        println!(
            "{name}: lambda {lambda:.4}  RR err {:.4} (x1 {:+.2})  RRO err {:.4} (x1 {:+.2})  true x1 {:+.0}",
            err(&rr.x_hat),
            rr.x_hat[0],
            err(&rro.x_hat),
            rro.x_hat[0],
            inst.x_bar[0]
        );
    }
    Ok(())
}
