//! Lowering of mapped matrices onto macros: which macros hold which planes,
//! amplifier gains, input scaling and the readout factors that bring ADC
//! values back to problem units.

use nalgebra::DVector;

use crate::amc::{TopologyConfig, DEFAULT_V_RAIL};
use crate::device::DeviceParams;
use crate::error::{domain, Result};
use crate::mapping::{MappedMatrix, Slice};
use crate::system::isa::{Instruction, Location, MovOp, Wiring, WriteMode, NUM_MACROS};
use crate::system::ConverterSpec;

/// Fraction of the rail targeted by the predicted largest MVM output.
pub const MVM_HEADROOM: f64 = 0.8;
/// Same for INV/PINV, whose outputs are more sensitive to noise.
pub const SOLVE_HEADROOM: f64 = 0.5;

/// Input voltage per problem unit so that `max_abs` lands on the top DAC code.
pub fn input_vscale(max_abs: f64, converter: &ConverterSpec) -> f64 {
    let m = if max_abs > 0.0 && max_abs.is_finite() {
        max_abs
    } else {
        1.0
    };
    converter.dac_max() / m
}

/// One slice of an MVM: a macro (and its negative partner) with its gain.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicePlan {
    pub slice: Slice,
    pub pos_macro: usize,
    pub neg_macro: Option<usize>,
    pub tia_gain: f64,
    /// Multiplies ADC volts into problem units of this slice's contribution.
    pub readout_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MvmPlan {
    pub slices: Vec<SlicePlan>,
    pub vscale: f64,
}

impl MvmPlan {
    /// Number of macros a mapped matrix occupies.
    pub fn macros_needed(mm: &MappedMatrix) -> usize {
        mm.level_planes.len()
    }

    /// Macros are taken in plane order from `first_macro`.
    ///
    /// `slice_bounds[s]` bounds `|codes_s^T x|` for slice `s` in problem
    /// input units; the gain places that bound at `MVM_HEADROOM` of the rail.
    pub fn new(
        mm: &MappedMatrix,
        first_macro: usize,
        params: &DeviceParams,
        vscale: f64,
        slice_bounds: &[f64],
    ) -> Result<Self> {
        let slices_in = mm.slices();
        if slice_bounds.len() != slices_in.len() {
            return domain("one output bound per slice is required");
        }
        if first_macro + Self::macros_needed(mm) > NUM_MACROS {
            return domain(format!(
                "{} planes from macro {first_macro} exceed the {NUM_MACROS}-macro group",
                mm.level_planes.len()
            ));
        }
        let spacing = params.level_spacing();
        let quantum = mm.scheme.code_quantum();
        let weights = mm.scheme.slice_weights();
        let differential = mm.slice_pair(slices_in[0]).1.is_some();
        let per_slice = if differential { 2 } else { 1 };
        let slices = slices_in
            .iter()
            .enumerate()
            .map(|(s, &slice)| {
                let bound = if slice_bounds[s] > 0.0 {
                    slice_bounds[s]
                } else {
                    1.0
                };
                let tia_gain = MVM_HEADROOM * DEFAULT_V_RAIL / (spacing * vscale * bound);
                let pos_macro = first_macro + per_slice * s;
                SlicePlan {
                    slice,
                    pos_macro,
                    neg_macro: differential.then_some(pos_macro + 1),
                    tia_gain,
                    readout_scale: -weights[s] * quantum / (tia_gain * spacing * vscale),
                }
            })
            .collect();
        Ok(Self { slices, vscale })
    }

    /// Bounds from a known input: `max_j |sum_i codes_s[i, j] x_i|` per slice.
    pub fn exact_bounds(mm: &MappedMatrix, x: &DVector<f64>) -> Vec<f64> {
        mm.slices()
            .iter()
            .map(|&slice| {
                let (pos, neg) = mm.slice_pair(slice);
                let mut codes = pos.levels.map(f64::from);
                if let Some(neg) = neg {
                    codes -= neg.levels.map(f64::from);
                }
                codes.tr_mul(x).amax()
            })
            .collect()
    }

    /// WRV for every plane followed by one CFG per slice. `plane_addr(k)` is
    /// the global-buffer slot holding plane `k` (plane order of `mm`).
    pub fn setup(
        &self,
        mm: &MappedMatrix,
        plane_addr: impl Fn(usize) -> Location,
        mode: WriteMode,
    ) -> Vec<Instruction> {
        let mut out = Vec::new();
        for sp in &self.slices {
            let (pos, neg) = mm.slice_pair(sp.slice);
            let idx = |p: &crate::mapping::LevelPlane| {
                mm.level_planes
                    .iter()
                    .position(|q| q == p)
                    .expect("plane of this matrix")
            };
            out.push(Instruction::Wrv {
                macro_id: sp.pos_macro,
                src: plane_addr(idx(pos)),
                mode,
                row: 0,
                col: 0,
            });
            if let (Some(neg), Some(id)) = (neg, sp.neg_macro) {
                out.push(Instruction::Wrv {
                    macro_id: id,
                    src: plane_addr(idx(neg)),
                    mode,
                    row: 0,
                    col: 0,
                });
            }
        }
        for sp in &self.slices {
            out.push(Instruction::cfg(
                sp.pos_macro,
                &TopologyConfig::mvm(sp.tia_gain),
                Wiring {
                    neg: sp.neg_macro,
                    ..Wiring::default()
                },
            ));
        }
        out
    }

    /// EXE/RDO per slice, summed into `dst`; `tmp` is scratch for later slices.
    pub fn execute(&self, src: Location, dst: Location, tmp: Location) -> Vec<Instruction> {
        let mut out = Vec::new();
        for (s, sp) in self.slices.iter().enumerate() {
            out.push(Instruction::Exe {
                macro_id: sp.pos_macro,
                src: Some(src),
                vscale: self.vscale,
            });
            out.push(Instruction::Rdo {
                macro_id: sp.pos_macro,
                dst: if s == 0 { dst } else { tmp },
                scale: sp.readout_scale,
            });
            if s > 0 {
                out.push(Instruction::Mov {
                    src: tmp,
                    dst,
                    op: MovOp::Acc,
                });
            }
        }
        out
    }
}

/// Gain of an INV/PINV solve whose predicted solution is `x_pred`.
///
/// The solved matrix is `k A` with `k = spacing / quantum`, so
/// `v = -vscale x / (k R)`; `R` puts `max |x_pred|` at `SOLVE_HEADROOM` of the rail.
pub fn solve_gain(x_pred: &DVector<f64>, quantum: f64, params: &DeviceParams, vscale: f64) -> f64 {
    let k = params.level_spacing() / quantum;
    let peak = if x_pred.amax() > 0.0 {
        x_pred.amax()
    } else {
        1.0
    };
    vscale * peak / (k * SOLVE_HEADROOM * DEFAULT_V_RAIL)
}

/// Readout factor of an INV/PINV solve: `x = v * (-k R / vscale)`.
pub fn solve_readout_scale(tia_gain: f64, quantum: f64, params: &DeviceParams, vscale: f64) -> f64 {
    -(params.level_spacing() / quantum) * tia_gain / vscale
}
