//! Matrix inversion in one step: exact conductances first, then a
//! programmed 4-bit differential pair.
//!
//! `cargo run --release --example inv`

use amc_sim::amc::{solve_inv, TopologyConfig};
use amc_sim::apps::validation::run_validation;
use amc_sim::apps::{Experiment, ExperimentConfig, MatrixSource};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> amc_sim::Result<()> {
    // 3x3 with conductances in siemens; the amplifiers settle at G v = -b / R
    let g = DMatrix::from_row_slice(
        3,
        3,
        &[40e-6, 5e-6, 0.0, 5e-6, 30e-6, 10e-6, 0.0, 10e-6, 50e-6],
    );
    let b = DVector::from_vec(vec![0.1, -0.2, 0.05]);
    let r = 1e4;
    let out = solve_inv(
        &g,
        &b,
        &TopologyConfig::inv(r),
        &mut ChaCha8Rng::seed_from_u64(0),
    )?;
    println!("analog  {:?}", out.v_out.as_slice());
    println!(
        "digital {:?}",
        (g.lu().solve(&(-&b / r)).unwrap()).as_slice()
    );

    let mut cfg = ExperimentConfig::new(Experiment::Inv);
    cfg.seed = 3;
    cfg.trials = 3;
    for m in [MatrixSource::Wishart(16), MatrixSource::Wishart(128)] {
        cfg.matrix = Some(m.clone());
        let report = run_validation(&cfg)?;
        let sat = report.trials.iter().filter(|t| t.saturated > 0).count();
        println!(
            "{m}: pooled median {:.2}%, {sat} of 3 trials hit the rails",
            100.0 * report.pooled_median()
        );
    }
    Ok(())
}
