//! Dominant eigenvector of a Gram matrix from the eigenvector circuit.
//!
//! `cargo run --release --example egv`

use amc_sim::amc::{solve_egv, TopologyConfig};
use amc_sim::apps::generate::gram;
use amc_sim::apps::validation::{cosine, reference_eigenvector, run_validation};
use amc_sim::apps::{Experiment, ExperimentConfig, MatrixSource};
use amc_sim::system::digital::power_iteration;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> amc_sim::Result<()> {
    // unquantized conductances, no noise
    let a = gram(64, 5)?;
    let unit = 1e-6;
    let lambda = power_iteration(&a, 20_000, 1e-13)?.lambda;
    let out = solve_egv(
        &(&a * unit),
        &TopologyConfig::egv(lambda, unit),
        &mut ChaCha8Rng::seed_from_u64(0),
    )?;
    println!(
        "lambda {lambda:.4}, exact-conductance cosine {:.6}",
        cosine(&out.v_out, &reference_eigenvector(&a, lambda))
    );

    // programmed 4-bit arrays with the default noise
    let mut cfg = ExperimentConfig::new(Experiment::Egv);
    cfg.seed = 5;
    cfg.trials = 4;
    cfg.matrix = Some(MatrixSource::Gram(128));
    for t in run_validation(&cfg)?.trials {
        match (t.cosine, t.failure) {
            (Some(c), _) => println!("trial {}: cosine {c:.4}", t.trial),
            (None, Some(f)) => println!("trial {}: {f}", t.trial),
            _ => {}
        }
    }
    Ok(())
}
