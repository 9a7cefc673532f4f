//! Real matrices to conductance levels and back.
//!
//! Signed matrices are split into a positive and a negative plane
//! (`A = A+ - A-`), each stored on its own array and recombined through the
//! analog inverter. With two slices an 8-bit magnitude code is split as
//! `code = 16 * msb + lsb` over two arrays whose outputs are recombined
//! digitally. Level 0 is treated as code zero; the `g_min` floor cancels
//! between differential planes and is subtracted by a reference column in
//! non-negative mode.

use nalgebra::{DMatrix, DVector};

use crate::device::{DeviceParams, NUM_LEVELS};
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignedMode {
    Differential,
    Nonnegative,
}

impl SignedMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Differential => "differential",
            Self::Nonnegative => "nonnegative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationScheme {
    pub bits_per_device: u32,
    pub n_slices: u32,
    pub signed_mode: SignedMode,
    /// Problem-unit magnitude mapped to full scale.
    pub a_max: f64,
}

impl QuantizationScheme {
    pub fn new(n_slices: u32, signed_mode: SignedMode, a_max: f64) -> Result<Self> {
        let s = Self {
            bits_per_device: 4,
            n_slices,
            signed_mode,
            a_max,
        };
        s.validate()?;
        Ok(s)
    }

    /// 4-bit differential scheme with full scale at `max |A|`.
    pub fn four_bit(a: &DMatrix<f64>) -> Result<Self> {
        Self::new(1, SignedMode::Differential, full_scale(a))
    }

    /// 8-bit (two-slice) differential scheme with full scale at `max |A|`.
    pub fn eight_bit(a: &DMatrix<f64>) -> Result<Self> {
        Self::new(2, SignedMode::Differential, full_scale(a))
    }

    pub fn validate(&self) -> Result<()> {
        if self.bits_per_device != 4 {
            return domain("only 4-bit devices are modeled");
        }
        if !matches!(self.n_slices, 1 | 2) {
            return domain(format!("n_slices must be 1 or 2, got {}", self.n_slices));
        }
        if !(self.a_max.is_finite() && self.a_max > 0.0) {
            return domain(format!("a_max must be positive, got {}", self.a_max));
        }
        Ok(())
    }

    pub fn total_bits(&self) -> u32 {
        self.bits_per_device * self.n_slices
    }

    /// Largest magnitude code (15 or 255).
    pub fn max_code(&self) -> u32 {
        (1 << self.total_bits()) - 1
    }

    /// Problem-unit value of one magnitude code step.
    pub fn code_quantum(&self) -> f64 {
        self.a_max / f64::from(self.max_code())
    }

    /// Weight of each slice plane in code units (MSB first).
    pub fn slice_weights(&self) -> Vec<f64> {
        match self.n_slices {
            1 => vec![1.0],
            _ => vec![f64::from(NUM_LEVELS), 1.0],
        }
    }

    /// Problem units represented by one siemens of level conductance on a
    /// single-slice plane.
    pub fn scale(&self, params: &DeviceParams) -> f64 {
        self.code_quantum() / params.level_spacing()
    }

    /// Siemens per problem unit on a single-slice plane (inverse of [`scale`](Self::scale)).
    pub fn unit_conductance(&self, params: &DeviceParams) -> f64 {
        1.0 / self.scale(params)
    }
}

/// `max |A|`, or 1 for an all-zero matrix.
pub fn full_scale(a: &DMatrix<f64>) -> f64 {
    let m = a.amax();
    if m > 0.0 && m.is_finite() {
        m
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Pos,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slice {
    Whole,
    Msb,
    Lsb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelPlane {
    pub sign: Sign,
    pub slice: Slice,
    pub levels: DMatrix<u8>,
}

impl LevelPlane {
    pub fn name(&self) -> String {
        let s = match self.sign {
            Sign::Pos => "pos",
            Sign::Neg => "neg",
        };
        match self.slice {
            Slice::Whole => s.to_string(),
            Slice::Msb => format!("{s}_msb"),
            Slice::Lsb => format!("{s}_lsb"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappedMatrix {
    pub level_planes: Vec<LevelPlane>,
    pub scheme: QuantizationScheme,
    pub shape: (usize, usize),
}

impl MappedMatrix {
    pub fn plane(&self, sign: Sign, slice: Slice) -> Option<&LevelPlane> {
        self.level_planes
            .iter()
            .find(|p| p.sign == sign && p.slice == slice)
    }

    /// Planes of one slice as `(pos, neg)`; `neg` is `None` in non-negative mode.
    pub fn slice_pair(&self, slice: Slice) -> (&LevelPlane, Option<&LevelPlane>) {
        (
            self.plane(Sign::Pos, slice)
                .expect("positive plane always present"),
            self.plane(Sign::Neg, slice),
        )
    }

    pub fn slices(&self) -> Vec<Slice> {
        match self.scheme.n_slices {
            1 => vec![Slice::Whole],
            _ => vec![Slice::Msb, Slice::Lsb],
        }
    }

    /// Signed integer code matrix (`sum sign * (16 msb + lsb)`).
    pub fn codes(&self) -> DMatrix<i32> {
        let (m, n) = self.shape;
        let mut out = DMatrix::zeros(m, n);
        for p in &self.level_planes {
            let sign = if p.sign == Sign::Pos { 1 } else { -1 };
            let weight = match p.slice {
                Slice::Msb => i32::from(NUM_LEVELS),
                _ => 1,
            };
            out += p.levels.map(|l| sign * weight * i32::from(l));
        }
        out
    }

    /// Transposed copy (every plane transposed).
    pub fn transpose(&self) -> MappedMatrix {
        MappedMatrix {
            level_planes: self
                .level_planes
                .iter()
                .map(|p| LevelPlane {
                    levels: p.levels.transpose(),
                    ..p.clone()
                })
                .collect(),
            scheme: self.scheme,
            shape: (self.shape.1, self.shape.0),
        }
    }
}

fn magnitude_code(v: f64, scheme: &QuantizationScheme) -> u32 {
    let c = (v / scheme.a_max * f64::from(scheme.max_code())).round_ties_even();
    c.clamp(0.0, f64::from(scheme.max_code())) as u32
}

fn planes_for(sign: Sign, codes: &DMatrix<u32>, scheme: &QuantizationScheme) -> Vec<LevelPlane> {
    let base = u32::from(NUM_LEVELS);
    match scheme.n_slices {
        1 => vec![LevelPlane {
            sign,
            slice: Slice::Whole,
            levels: codes.map(|c| c as u8),
        }],
        _ => vec![
            LevelPlane {
                sign,
                slice: Slice::Msb,
                levels: codes.map(|c| (c / base) as u8),
            },
            LevelPlane {
                sign,
                slice: Slice::Lsb,
                levels: codes.map(|c| (c % base) as u8),
            },
        ],
    }
}

pub fn quantize_matrix(a: &DMatrix<f64>, scheme: &QuantizationScheme) -> Result<MappedMatrix> {
    scheme.validate()?;
    if a.iter().any(|v| !v.is_finite()) {
        return domain("matrix contains non-finite entries");
    }
    let amax = scheme.a_max;
    let mut level_planes = Vec::new();
    match scheme.signed_mode {
        SignedMode::Differential => {
            let pos = a.map(|v| magnitude_code(v.clamp(0.0, amax), scheme));
            let neg = a.map(|v| magnitude_code((-v).clamp(0.0, amax), scheme));
            level_planes.extend(planes_for(Sign::Pos, &pos, scheme));
            level_planes.extend(planes_for(Sign::Neg, &neg, scheme));
        }
        SignedMode::Nonnegative => {
            let pos = a.map(|v| magnitude_code(v.clamp(0.0, amax), scheme));
            level_planes.extend(planes_for(Sign::Pos, &pos, scheme));
        }
    }
    Ok(MappedMatrix {
        level_planes,
        scheme: *scheme,
        shape: a.shape(),
    })
}

/// Digital twin of what the programmed arrays represent.
pub fn reconstruct_effective_matrix(mm: &MappedMatrix) -> DMatrix<f64> {
    mm.codes().map(|c| f64::from(c) * mm.scheme.code_quantum())
}

fn same_len(a: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
    if a.len() != b.len() {
        return domain(format!("vector lengths differ: {} vs {}", a.len(), b.len()));
    }
    Ok(())
}

/// Recombines slice outputs given in level units: `(16 msb + lsb) * quantum`.
pub fn combine_slices(
    v_msb: &DVector<f64>,
    v_lsb: &DVector<f64>,
    scheme: &QuantizationScheme,
) -> Result<DVector<f64>> {
    same_len(v_msb, v_lsb)?;
    if scheme.n_slices != 2 {
        return domain("combine_slices needs a two-slice scheme");
    }
    Ok((v_msb * f64::from(NUM_LEVELS) + v_lsb) * scheme.code_quantum())
}

/// Positive-plane output minus negative-plane output.
pub fn signed_output_combine(v_pos: &DVector<f64>, v_neg: &DVector<f64>) -> Result<DVector<f64>> {
    same_len(v_pos, v_neg)?;
    Ok(v_pos - v_neg)
}
