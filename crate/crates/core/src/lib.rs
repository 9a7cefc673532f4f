//! Behavioral simulator of a reconfigurable analog matrix-computing
//! architecture built on RRAM crossbars.
//!
//! The layers, bottom up:
//!
//! * [`device`]: a single multilevel RRAM cell (filament state, SET/RESET
//!   pulses, noisy reads, 16-level map).
//! * [`crossbar`]: a 128 x 128 array of cells with an active region.
//! * [`write_verify`]: closed-loop programming of cells to target levels.
//! * [`amc`]: the analog macro, whose register array selects one of four
//!   feedback topologies (MVM, INV, PINV, EGV).
//! * [`mapping`]: real matrices to differential, bit-sliced level planes.
//! * [`system`]: converters, digital units, the instruction set and the
//!   machine that runs it.
//! * [`apps`]: matrix-solver validation and CNN inference built on the above.
//!
//! ```
//! use amc_sim::amc::{solve_mvm, TopologyConfig};
//! use nalgebra::{dmatrix, dvector};
//!
//! let g = dmatrix![1e-5, 2e-5; 3e-5, 4e-5];
//! let out = solve_mvm(&g, &dvector![0.1, 0.2], &TopologyConfig::mvm(1e4), &mut rand::rng()).unwrap();
//! assert!((out.v_out[0] + 0.07).abs() < 1e-12);
//! ```

pub mod amc;
pub mod apps;
pub mod crossbar;
pub mod device;
pub mod error;
pub mod mapping;
pub mod system;
pub mod write_verify;

pub use error::{Error, Result};
