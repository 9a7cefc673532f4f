//! The reconfigurable analog macro: register-array topology selection and
//! steady-state solvers.

mod solve;
mod topology;

pub use solve::{
    check_feasibility, solve_egv, solve_inv, solve_mvm, solve_pinv, spectral_norm, AnalogResult,
    ArrayOperand, ConductanceSource, Diagnostics, Differential, FloorCancelled, EIGEN_GAP_LIMIT,
    ILL_CONDITIONED, SINGULAR_PIVOT,
};
pub use topology::{
    decode_topology, encode_topology, RegisterBits, TopologyConfig, TopologyKind, DEFAULT_V_RAIL,
    GATE_CASCADE, GATE_COL_TIA, GATE_CURRENT_INJECT, GATE_LAMBDA, GATE_ROW_DAC, GATE_ROW_FEEDBACK,
};
