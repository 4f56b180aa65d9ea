//! Kernel density estimates of component errors in the spike experiment,
//! written as CSV to stdout; the modes are reported on stderr.

use robust_lsq::experiments::{error_densities, run_experiment, write_density_csv, ExperimentConfig, ExperimentMethod};

fn main() -> robust_lsq::Result<()> {
    use ExperimentMethod::*;
    let cfg = ExperimentConfig {
        trials: 500,
        round_digits: vec![2],
        methods: vec![Ols, RrGcv, RrMdp, Ro],
        ..ExperimentConfig::spike_default()
    };
    let results = run_experiment(&cfg, 1)?;
    let curves = error_densities(&results, 2);
    for (method, class, curve) in &curves {
        eprintln!("{:<7} {:<5} mode {:+8.3}  bandwidth {:.3}", method.to_string(), class.as_str(), curve.mode(), curve.bandwidth);
    }
    write_density_csv(std::io::stdout().lock(), &curves)
}
