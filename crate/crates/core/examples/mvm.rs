//! One MVM validation trial on a 128 x 128 Wishart matrix, 4-bit vs 8-bit.
//!
//! `cargo run --release --example mvm`

use amc_sim::apps::validation::run_validation;
use amc_sim::apps::{Experiment, ExperimentConfig, MatrixSource};

fn main() -> amc_sim::Result<()> {
    for bits in [4, 8] {
        let mut cfg = ExperimentConfig::new(Experiment::Mvm);
        cfg.seed = 42;
        cfg.trials = 3;
        cfg.bits = bits;
        cfg.matrix = Some(MatrixSource::Wishart(128));
        let report = run_validation(&cfg)?;
        for t in &report.trials {
            println!(
                "{bits}-bit trial {}: median relative error {:.2}%",
                t.trial,
                100.0 * t.median_rel_error()
            );
        }
        println!(
            "{bits}-bit pooled median {:.2}%\n",
            100.0 * report.pooled_median()
        );
    }
    Ok(())
}
