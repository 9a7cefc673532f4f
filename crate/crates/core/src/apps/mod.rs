//! Experiment harness: configuration, matrix generators and file formats,
//! the solver validation experiments, and CNN inference.

pub mod compile;
pub mod config;
pub mod dump;
pub mod generate;
pub mod matrix_io;
pub mod nn;
pub mod validation;

pub use config::{Experiment, ExperimentConfig, MatrixSource};

/// Seed of batch instance `index` under a run seed. Each instance draws
/// from its own generator, so serial and parallel batches agree.
pub fn instance_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
