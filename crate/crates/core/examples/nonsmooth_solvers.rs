//! Quasi-Newton against diminishing-step subgradient descent on the same
//! robust objective, from zero and from a random start.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use robust_lsq::experiments::{generate_instance, ExperimentConfig};
use robust_lsq::linalg::DenseVector;
use robust_lsq::problem::UncertaintySet;
use robust_lsq::robust::{solve_ro, RobustSolveOptions, RobustSolver};

fn main() -> robust_lsq::Result<()> {
    let inst = generate_instance(&ExperimentConfig::cauchy_default(), 2)?;
    let problem = inst.observed(2)?;
    let set = UncertaintySet::fixed_point(0.005)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let random = DenseVector::from_fn(problem.cols(), |_, _| StandardNormal.sample(&mut rng));

    for (label, solver) in [
        ("quasi-Newton", RobustSolver::default()),
        ("subgradient 5k", RobustSolver::Subgradient { max_iters: 5_000 }),
        ("subgradient 50k", RobustSolver::Subgradient { max_iters: 50_000 }),
    ] {
        for (start, x0) in [("zero", None), ("random", Some(random.clone()))] {
            let opts = RobustSolveOptions { solver: solver.clone(), x0 };
            let (est, report) = solve_ro(&problem, &set, &opts)?;
            println!(
                "{label:<16} from {start:<6}  f = {:.10}  iterations {:>6}  {:?}",
                est.objective_value, report.iterations, report.termination
            );
        }
    }
    Ok(())
}
