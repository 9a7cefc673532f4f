//! CNN inference on the bundled MNIST subset at 4 and 8 bits.
//!
//! `cargo run --release --example mnist_inference [n_images]`

use amc_sim::apps::nn::nn_infer;
use amc_sim::apps::{Experiment, ExperimentConfig};

fn main() -> amc_sim::Result<()> {
    let n = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(200);
    for bits in [4, 8] {
        let mut cfg = ExperimentConfig::new(Experiment::NnInfer);
        cfg.seed = 1;
        cfg.bits = bits;
        cfg.n_images = Some(n);
        let r = nn_infer(&cfg)?;
        println!(
            "{bits}-bit: analog {:.1}%  quantized digital {:.1}%  float {:.1}%  ({n} images)",
            100.0 * r.analog_accuracy(),
            100.0 * r.quantized_accuracy(),
            100.0 * r.float_accuracy()
        );
    }
    Ok(())
}
