//! Register-array configuration of a macro.
//!
//! A configuration is stored as four 64-bit register words:
//!
//! | word | content |
//! |------|---------|
//! | 0    | transmission-gate mask (bits 0..6), all other bits reserved = 0 |
//! | 1    | TIA / input resistance in ohms (IEEE-754 bits) |
//! | 2    | EGV lambda in siemens (IEEE-754 bits, must be +0.0 for other kinds) |
//! | 3    | output rail in volts (IEEE-754 bits) |
//!
//! Only the four gate patterns listed in [`TopologyKind::gate_mask`] decode;
//! in particular the all-ones word is rejected.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Rows driven by the input DACs.
pub const GATE_ROW_DAC: u64 = 1 << 0;
/// Columns held at virtual ground by the OPAs in TIA mode.
pub const GATE_COL_TIA: u64 = 1 << 1;
/// OPA outputs routed back onto the rows.
pub const GATE_ROW_FEEDBACK: u64 = 1 << 2;
/// Input currents injected at the OPA summing nodes.
pub const GATE_CURRENT_INJECT: u64 = 1 << 3;
/// Outputs routed through the second (transposed) array.
pub const GATE_CASCADE: u64 = 1 << 4;
/// Lambda feedback conductance enabled.
pub const GATE_LAMBDA: u64 = 1 << 5;
const GATE_BITS: u64 = 0x3f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    Mvm,
    Inv,
    Pinv,
    Egv,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 4] = [Self::Mvm, Self::Inv, Self::Pinv, Self::Egv];

    pub fn gate_mask(self) -> u64 {
        match self {
            Self::Mvm => GATE_ROW_DAC | GATE_COL_TIA,
            Self::Inv => GATE_COL_TIA | GATE_ROW_FEEDBACK | GATE_CURRENT_INJECT,
            Self::Pinv => GATE_COL_TIA | GATE_ROW_FEEDBACK | GATE_CURRENT_INJECT | GATE_CASCADE,
            Self::Egv => GATE_COL_TIA | GATE_ROW_FEEDBACK | GATE_LAMBDA,
        }
    }

    fn from_gate_mask(mask: u64) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.gate_mask() == mask)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Mvm => "mvm",
            Self::Inv => "inv",
            Self::Pinv => "pinv",
            Self::Egv => "egv",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mvm" => Ok(Self::Mvm),
            "inv" => Ok(Self::Inv),
            "pinv" => Ok(Self::Pinv),
            "egv" => Ok(Self::Egv),
            other => Err(Error::Parse(format!("unknown topology '{other}'"))),
        }
    }
}

/// Default output rail (volts).
pub const DEFAULT_V_RAIL: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyConfig {
    pub kind: TopologyKind,
    /// Feedback resistance of the TIAs for MVM; input resistance converting
    /// voltages into injected currents for INV/PINV. Ohms.
    pub tia_gain: f64,
    /// Eigenvalue in conductance units (siemens); EGV only, zero otherwise.
    pub lambda: f64,
    pub v_rail: f64,
}

impl TopologyConfig {
    pub fn new(kind: TopologyKind, tia_gain: f64) -> Self {
        Self {
            kind,
            tia_gain,
            lambda: 0.0,
            v_rail: DEFAULT_V_RAIL,
        }
    }

    pub fn mvm(tia_gain: f64) -> Self {
        Self::new(TopologyKind::Mvm, tia_gain)
    }

    pub fn inv(input_resistance: f64) -> Self {
        Self::new(TopologyKind::Inv, input_resistance)
    }

    pub fn pinv(input_resistance: f64) -> Self {
        Self::new(TopologyKind::Pinv, input_resistance)
    }

    /// EGV configuration for a problem-unit eigenvalue `lambda` on arrays
    /// where one problem unit corresponds to `unit_conductance` siemens.
    pub fn egv(lambda: f64, unit_conductance: f64) -> Self {
        Self {
            lambda: lambda * unit_conductance,
            ..Self::new(TopologyKind::Egv, 1.0)
        }
    }

    pub fn with_rail(mut self, v_rail: f64) -> Self {
        self.v_rail = v_rail;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tia_gain.is_finite() && self.tia_gain > 0.0) {
            return Err(Error::Domain(format!("invalid gain {}", self.tia_gain)));
        }
        if !(self.v_rail.is_finite() && self.v_rail > 0.0) {
            return Err(Error::Domain(format!("invalid rail {}", self.v_rail)));
        }
        if !self.lambda.is_finite() || (self.kind != TopologyKind::Egv && self.lambda != 0.0) {
            return Err(Error::Domain(format!(
                "invalid lambda {} for {}",
                self.lambda, self.kind
            )));
        }
        Ok(())
    }

    pub fn register_bits(&self) -> RegisterBits {
        encode_topology(self)
    }
}

/// Raw register-array contents for one macro.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegisterBits(pub [u64; 4]);

impl RegisterBits {
    pub const ALL_ONES: RegisterBits = RegisterBits([u64::MAX; 4]);

    pub fn gate_mask(&self) -> u64 {
        self.0[0]
    }

    /// Hex rendering used in dumps and program text.
    pub fn to_hex(&self) -> String {
        self.0
            .iter()
            .map(|w| format!("{w:016x}"))
            .collect::<Vec<_>>()
            .join(":")
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(Error::Decode(format!(
                "expected 4 register words, got {}",
                parts.len()
            )));
        }
        let mut words = [0u64; 4];
        for (w, p) in words.iter_mut().zip(parts) {
            *w = u64::from_str_radix(p, 16)
                .map_err(|e| Error::Decode(format!("bad register word '{p}': {e}")))?;
        }
        Ok(Self(words))
    }
}

pub fn encode_topology(cfg: &TopologyConfig) -> RegisterBits {
    RegisterBits([
        cfg.kind.gate_mask(),
        cfg.tia_gain.to_bits(),
        cfg.lambda.to_bits(),
        cfg.v_rail.to_bits(),
    ])
}

pub fn decode_topology(bits: &RegisterBits) -> Result<TopologyConfig> {
    let [mask, gain, lambda, rail] = bits.0;
    if mask & !GATE_BITS != 0 {
        return Err(Error::Decode(format!(
            "reserved gate bits set in {mask:#x}"
        )));
    }
    let kind = TopologyKind::from_gate_mask(mask).ok_or_else(|| {
        Error::Decode(format!(
            "gate pattern {mask:#08b} is not a supported topology"
        ))
    })?;
    let lambda = f64::from_bits(lambda);
    if kind != TopologyKind::Egv && lambda.to_bits() != 0 {
        return Err(Error::Decode(format!(
            "lambda payload present on {kind} configuration"
        )));
    }
    let cfg = TopologyConfig {
        kind,
        tia_gain: f64::from_bits(gain),
        lambda,
        v_rail: f64::from_bits(rail),
    };
    cfg.validate().map_err(|e| Error::Decode(e.to_string()))?;
    Ok(cfg)
}
