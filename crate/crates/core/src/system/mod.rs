//! System level: converters, digital units, the instruction set and the
//! machine that executes it.

pub mod converter;
pub mod digital;
pub mod isa;
pub mod machine;

pub use converter::{adc, adc_readout, dac, dac_drive, ConverterSpec};
pub use isa::{
    decode, format_program, parse_program, Instruction, Location, MovOp, Wiring, WriteMode,
    NUM_MACROS,
};
pub use machine::{macro_rng, run_program, Latched, MachineState, Value};
