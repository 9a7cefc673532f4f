//! Least-squares regression with the two-array pseudo-inverse circuit.
//!
//! `cargo run --release --example pinv_regression`

use amc_sim::apps::generate::regression;
use amc_sim::apps::validation::{least_squares, run_validation};
use amc_sim::apps::{instance_seed, Experiment, ExperimentConfig, MatrixSource};

fn main() -> amc_sim::Result<()> {
    let mut cfg = ExperimentConfig::new(Experiment::Pinv);
    cfg.seed = 11;
    cfg.trials = 1;
    cfg.matrix = Some(MatrixSource::Regression(128, 6));
    let report = run_validation(&cfg)?;
    let t = &report.trials[0];
    let reg = regression(128, 6, instance_seed(cfg.seed, 0))?;
    let fit = least_squares(&reg.design, &reg.response)?;
    println!("coef   true      least-squares  analog");
    for i in 0..6 {
        let analog = t.analog.as_ref().map_or(f64::NAN, |a| a[i]);
        println!(
            "{i}   {:9.4}  {:9.4}      {:9.4}",
            reg.coef[i], fit[i], analog
        );
    }
    println!("median relative error {:.2}%", 100.0 * t.median_rel_error());
    Ok(())
}
