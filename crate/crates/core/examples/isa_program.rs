//! A hand-written program: program two macros, run an MVM, then check the
//! programmed cells with the comparison units.
//!
//! `cargo run --example isa_program`

use amc_sim::apps::dump::dump_output;
use amc_sim::device::DeviceParams;
use amc_sim::system::isa::{parse_program, Location};
use amc_sim::system::{run_program, ConverterSpec, MachineState, Value};
use amc_sim::write_verify::WriteVerifyConfig;
use nalgebra::{DMatrix, DVector};

const PROGRAM: &str = "\
# positive and negative planes
WRV macro=0 src=g:1
WRV macro=1 src=g:2
CFG macro=0 kind=mvm gain=4000.0 neg=1
EXE macro=0 src=g:0 vscale=0.5
RDO macro=0 dst=o:0 scale=1.0
CMP macro=0 src=g:1 dst=o:1
ACT src=o:0 dst=o:2 fn=relu
HALT
";

fn main() -> amc_sim::Result<()> {
    let params = DeviceParams::default();
    let mut state = MachineState::new(
        params,
        ConverterSpec::default(),
        WriteVerifyConfig::for_device(&params),
        2024,
    )?;
    state.load(
        Location::global(0),
        Value::Vector(DVector::from_vec(vec![1.0, -0.5, 0.25])),
    );
    state.load(
        Location::global(1),
        Value::Matrix(DMatrix::from_row_slice(
            3,
            2,
            &[15.0, 0.0, 3.0, 8.0, 0.0, 12.0],
        )),
    );
    state.load(
        Location::global(2),
        Value::Matrix(DMatrix::from_row_slice(
            3,
            2,
            &[0.0, 4.0, 0.0, 0.0, 7.0, 0.0],
        )),
    );
    let prog = parse_program(PROGRAM)?;
    run_program(&mut state, &prog)?;
    print!("{}", dump_output(&state));
    println!("analog operations: {}", state.analog_ops);
    Ok(())
}
