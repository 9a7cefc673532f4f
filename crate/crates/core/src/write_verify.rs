//! Incremental-step write-verify programming.
//!
//! Each cell is read, compared with its target band and nudged by a single
//! SET or RESET pulse. The gate (SET) or source-line (RESET) voltage ramps
//! up by one step per pulse issued in the same direction; the opposite ramp
//! restarts whenever the direction flips. The loop ends on the first in-band
//! verify read or when the pulse budget is spent.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::crossbar::CrossbarArray;
use crate::device::{
    apply_reset_pulse, apply_set_pulse, level_to_conductance, read_conductance, DeviceParams,
    DeviceState, LevelCode,
};
use crate::error::{domain, Result};

/// Default fraction of the half level spacing used as verify tolerance.
pub const DEFAULT_TOL_FRACTION: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WriteVerifyConfig {
    /// Half-width of the acceptance band (siemens).
    pub tol: f64,
    pub max_pulses: u32,
    pub vg_start: f64,
    pub vg_step: f64,
    pub vg_max: f64,
    pub vsl_start: f64,
    pub vsl_step: f64,
    pub vsl_max: f64,
}

impl WriteVerifyConfig {
    /// Default schedule with the tolerance derived from the device's level spacing.
    pub fn for_device(params: &DeviceParams) -> Self {
        Self {
            tol: 0.5 * params.level_spacing() * DEFAULT_TOL_FRACTION,
            max_pulses: 200,
            vg_start: 0.6,
            vg_step: 0.02,
            vg_max: 1.6,
            vsl_start: 0.6,
            vsl_step: 0.02,
            vsl_max: 1.6,
        }
    }

    pub fn with_tol_fraction(mut self, params: &DeviceParams, fraction: f64) -> Self {
        self.tol = 0.5 * params.level_spacing() * fraction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return domain("write-verify tolerance must be positive");
        }
        if self.max_pulses == 0 {
            return domain("max_pulses must be at least 1");
        }
        if !(self.vg_step > 0.0 && self.vsl_step > 0.0) {
            return domain("schedule steps must be positive");
        }
        if self.vg_start > self.vg_max || self.vsl_start > self.vsl_max {
            return domain("schedule start exceeds its maximum");
        }
        Ok(())
    }
}

impl Default for WriteVerifyConfig {
    fn default() -> Self {
        Self::for_device(&DeviceParams::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgramReport {
    pub pulses_used: u32,
    /// Conductance seen by the last verify read.
    pub final_g: f64,
    pub target_g: f64,
    pub success: bool,
}

/// A pulse issued by the controller, with the verify read that triggered it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pulse {
    Set { read_g: f64, v_g: f64 },
    Reset { read_g: f64, v_sl: f64 },
}

/// Programs one cell to `target`.
pub fn program_cell<R: Rng + ?Sized>(
    state: DeviceState,
    target: LevelCode,
    cfg: &WriteVerifyConfig,
    params: &DeviceParams,
    rng: &mut R,
) -> (DeviceState, ProgramReport) {
    program_cell_traced(state, target, cfg, params, rng, |_| {})
}

/// [`program_cell`] reporting every issued pulse to `on_pulse`.
pub fn program_cell_traced<R: Rng + ?Sized>(
    mut state: DeviceState,
    target: LevelCode,
    cfg: &WriteVerifyConfig,
    params: &DeviceParams,
    rng: &mut R,
    mut on_pulse: impl FnMut(Pulse),
) -> (DeviceState, ProgramReport) {
    let target_g = level_to_conductance(target, params);
    let mut v_g = cfg.vg_start;
    let mut v_sl = cfg.vsl_start;
    let mut last_was_set: Option<bool> = None;
    let mut pulses = 0u32;
    loop {
        let g = read_conductance(&state, params, rng);
        let in_band = (g - target_g).abs() <= cfg.tol;
        if in_band || pulses >= cfg.max_pulses {
            return (
                state,
                ProgramReport {
                    pulses_used: pulses,
                    final_g: g,
                    target_g,
                    success: in_band,
                },
            );
        }
        if g < target_g {
            if last_was_set == Some(false) {
                v_g = cfg.vg_start;
            }
            on_pulse(Pulse::Set { read_g: g, v_g });
            state = apply_set_pulse(state, v_g, params, rng);
            v_g = (v_g + cfg.vg_step).min(cfg.vg_max);
            last_was_set = Some(true);
        } else {
            if last_was_set == Some(true) {
                v_sl = cfg.vsl_start;
            }
            on_pulse(Pulse::Reset { read_g: g, v_sl });
            state = apply_reset_pulse(state, v_sl, params, rng);
            v_sl = (v_sl + cfg.vsl_step).min(cfg.vsl_max);
            last_was_set = Some(false);
        }
        pulses += 1;
    }
}

/// Programs every cell of the active region. One seed is drawn from `rng`;
/// cell `(r, c)` then runs on its own ChaCha stream so the result does not
/// depend on evaluation order.
pub fn program_array<R: Rng + ?Sized>(
    array: &mut CrossbarArray,
    targets: &DMatrix<u8>,
    cfg: &WriteVerifyConfig,
    rng: &mut R,
) -> Result<DMatrix<ProgramReport>> {
    cfg.validate()?;
    array.check_shape(targets.shape())?;
    let levels: Vec<LevelCode> = targets
        .iter()
        .map(|&l| LevelCode::new(l))
        .collect::<Result<_>>()?;
    let base_seed = rng.next_u64();
    let (m, n) = targets.shape();
    let params = *array.params();
    // nalgebra storage is column-major: index k -> (k % m, k / m)
    let results: Vec<(DeviceState, ProgramReport)> = levels
        .par_iter()
        .enumerate()
        .map(|(k, &level)| {
            let (r, c) = (k % m, k / m);
            let mut cell_rng = ChaCha8Rng::seed_from_u64(base_seed);
            cell_rng.set_stream((r * n + c) as u64);
            program_cell(array.cell(r, c), level, cfg, &params, &mut cell_rng)
        })
        .collect();
    let mut reports = Vec::with_capacity(results.len());
    for (k, (state, report)) in results.into_iter().enumerate() {
        array.set_cell(k % m, k / m, state);
        reports.push(report);
    }
    Ok(DMatrix::from_vec(m, n, reports))
}

pub fn success_rate(reports: &DMatrix<ProgramReport>) -> f64 {
    if reports.is_empty() {
        return 1.0;
    }
    reports.iter().filter(|r| r.success).count() as f64 / reports.len() as f64
}

/// CSV dump of a report matrix.
pub fn reports_to_csv(reports: &DMatrix<ProgramReport>) -> String {
    let mut out = String::from("row,col,target_g,final_g,pulses_used,success\n");
    for r in 0..reports.nrows() {
        for c in 0..reports.ncols() {
            let p = &reports[(r, c)];
            let _ = writeln!(
                out,
                "{r},{c},{:e},{:e},{},{}",
                p.target_g, p.final_g, p.pulses_used, p.success
            );
        }
    }
    out
}
