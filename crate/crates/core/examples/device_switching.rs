//! Pulse-by-pulse SET and RESET trajectories of one cell.
//!
//! `cargo run --example device_switching`

use amc_sim::device::{apply_reset_pulse, apply_set_pulse, DeviceParams, DeviceState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let params = DeviceParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cell = DeviceState::fresh(&params);

    println!("pulse,v,g_uS");
    for (i, v) in [1.0, 1.2, 1.4]
        .iter()
        .flat_map(|&v| std::iter::repeat_n(v, 5))
        .enumerate()
    {
        cell = apply_set_pulse(cell, v, &params, &mut rng);
        println!("set{i},{v},{:.3}", cell.g() * 1e6);
    }
    for (i, v) in [1.0, 1.3]
        .iter()
        .flat_map(|&v| std::iter::repeat_n(v, 5))
        .enumerate()
    {
        cell = apply_reset_pulse(cell, v, &params, &mut rng);
        println!("reset{i},{v},{:.3}", cell.g() * 1e6);
    }
    // below threshold nothing moves
    let before = cell;
    cell = apply_set_pulse(cell, 0.4, &params, &mut rng);
    assert_eq!(before, cell);
}
