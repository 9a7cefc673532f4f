//! Programs a 16 x 16 block to all 16 levels and prints the pulse statistics.
//!
//! `cargo run --example write_verify`

use amc_sim::crossbar::{ActiveRegion, CrossbarArray};
use amc_sim::device::{DeviceParams, DeviceState, LevelCode};
use amc_sim::write_verify::{
    program_array, program_cell_traced, success_rate, Pulse, WriteVerifyConfig,
};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> amc_sim::Result<()> {
    let params = DeviceParams::default();
    let cfg = WriteVerifyConfig::for_device(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // one cell, traced
    let mut trace = Vec::new();
    let (_, rep) = program_cell_traced(
        DeviceState::fresh(&params),
        LevelCode::new(9)?,
        &cfg,
        &params,
        &mut rng,
        |p| trace.push(p),
    );
    for p in &trace {
        match p {
            Pulse::Set { read_g, v_g } => {
                println!("SET   Vg={v_g:.2}  read {:.2} uS", read_g * 1e6)
            }
            Pulse::Reset { read_g, v_sl } => {
                println!("RESET Vsl={v_sl:.2} read {:.2} uS", read_g * 1e6)
            }
        }
    }
    println!(
        "level 9: {} pulses, final {:.2} uS, target {:.2} uS\n",
        rep.pulses_used,
        rep.final_g * 1e6,
        rep.target_g * 1e6
    );

    // a block: row r holds level r
    let mut array = CrossbarArray::new(params)?.with_region(ActiveRegion::sized(16, 16))?;
    let targets = DMatrix::from_fn(16, 16, |r, _| r as u8);
    let reports = program_array(&mut array, &targets, &cfg, &mut rng)?;
    println!("success rate {:.1}%", 100.0 * success_rate(&reports));
    let g = array.conductance_matrix();
    for level in 0..16 {
        let row = g.row(level);
        let pulses: u32 = reports.row(level).iter().map(|r| r.pulses_used).sum();
        println!(
            "level {level:2}: mean {:6.2} uS, mean pulses {:.1}",
            row.mean() * 1e6,
            f64::from(pulses) / 16.0
        );
    }
    Ok(())
}
