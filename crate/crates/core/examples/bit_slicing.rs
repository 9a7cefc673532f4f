//! Two 4-bit slices reproduce an 8-bit integer matrix-vector product.
//!
//! `cargo run --example bit_slicing`

use amc_sim::apps::compile::{input_vscale, MvmPlan};
use amc_sim::device::DeviceParams;
use amc_sim::mapping::{quantize_matrix, QuantizationScheme, SignedMode};
use amc_sim::system::isa::{format_program, Instruction, Location, WriteMode};
use amc_sim::system::{run_program, ConverterSpec, MachineState, Value};
use amc_sim::write_verify::WriteVerifyConfig;
use nalgebra::{DMatrix, DVector};

fn main() -> amc_sim::Result<()> {
    let codes = DMatrix::from_row_slice(3, 2, &[200.0, -17.0, 5.0, 255.0, -128.0, 64.0]);
    let x = DVector::from_vec(vec![3.0, -1.0, 2.0]);
    let scheme = QuantizationScheme::new(2, SignedMode::Differential, 255.0)?;
    let mm = quantize_matrix(&codes, &scheme)?;
    for p in &mm.level_planes {
        println!("{}:\n{}", p.name(), p.levels);
    }

    let params = DeviceParams::default().noiseless();
    let conv = ConverterSpec::with_bits(32);
    let plan = MvmPlan::new(
        &mm,
        0,
        &params,
        input_vscale(x.amax(), &conv),
        &MvmPlan::exact_bounds(&mm, &x),
    )?;
    let mut state = MachineState::new(params, conv, WriteVerifyConfig::for_device(&params), 0)?;
    for (k, p) in mm.level_planes.iter().enumerate() {
        state.load(
            Location::global(100 + k),
            Value::Matrix(p.levels.map(f64::from)),
        );
    }
    state.load(Location::global(0), Value::Vector(x.clone()));
    let mut prog = plan.setup(&mm, |k| Location::global(100 + k), WriteMode::Ideal);
    prog.extend(plan.execute(
        Location::global(0),
        Location::output(0),
        Location::output(1),
    ));
    prog.push(Instruction::Halt);
    print!("{}", format_program(&prog));
    run_program(&mut state, &prog)?;

    let y = state.get(Location::output(0))?.as_vector()?;
    println!(
        "analog  {:?}",
        y.iter().map(|v| v.round()).collect::<Vec<_>>()
    );
    println!("integer {:?}", (codes.transpose() * &x).as_slice());
    Ok(())
}
