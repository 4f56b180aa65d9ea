//! A reduced Cauchy experiment: mean relative error by rounding digit.
//! Pass a trial count as the first argument (default 200).

use robust_lsq::experiments::{run_experiment, summary_table, ExperimentConfig};

fn main() -> robust_lsq::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let cfg = ExperimentConfig {
        trials,
        ..ExperimentConfig::cauchy_default()
    };
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let results = run_experiment(&cfg, threads)?;
    print!("{}", summary_table(&results.rows));
    Ok(())
}
