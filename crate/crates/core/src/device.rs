//! Behavioral 1T1R RRAM cell.
//!
//! The cell is described by a single filament variable `x` in `[0, 1]`;
//! conductance is affine in `x` between `g_min` and `g_max`. SET pulses are
//! gate-controlled (bit line held at `v_set`, source line grounded) and grow
//! the filament, RESET pulses are source-line controlled and dissolve it.
//! Both follow a saturating exponential in the overdrive voltage:
//!
//! ```text
//! SET:   dx = alpha_set   * max(0, exp(beta_set   * (v_g  - v_th_set))   - 1) * (1 - x) * n
//! RESET: dx = alpha_reset * max(0, exp(beta_reset * (v_sl - v_th_reset)) - 1) * x       * n
//! ```
//!
//! where `n` is a lognormal write-noise factor with unit median.

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::error::{domain, Result};

/// Number of programmable conductance levels (4 bits).
pub const NUM_LEVELS: u8 = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    /// Siemens.
    pub g_min: f64,
    /// Siemens.
    pub g_max: f64,
    /// Seconds.
    pub pulse_width: f64,
    /// Bit-line bias during SET (volts).
    pub v_set: f64,
    /// Gate threshold below which SET has no effect (volts).
    pub v_th_set: f64,
    /// Source-line threshold for RESET (volts).
    pub v_th_reset: f64,
    pub alpha_set: f64,
    pub alpha_reset: f64,
    /// 1/V.
    pub beta_set: f64,
    /// 1/V.
    pub beta_reset: f64,
    /// Std-dev of the log of the multiplicative write-noise factor.
    pub sigma_write: f64,
    /// Std-dev of the relative read noise.
    pub sigma_read: f64,
    pub rng_seed: u64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            g_min: 1e-6,
            g_max: 100e-6,
            pulse_width: 30e-9,
            v_set: 2.0,
            v_th_set: 0.5,
            v_th_reset: 0.5,
            alpha_set: 0.04,
            alpha_reset: 0.04,
            beta_set: 3.0,
            beta_reset: 3.0,
            sigma_write: 0.1,
            sigma_read: 0.02,
            rng_seed: 0,
        }
    }
}

impl DeviceParams {
    /// Same device with both noise sources switched off.
    pub fn noiseless(mut self) -> Self {
        self.sigma_write = 0.0;
        self.sigma_read = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g_min > 0.0 && self.g_min < self.g_max) {
            return domain(format!(
                "need 0 < g_min < g_max, got {} / {}",
                self.g_min, self.g_max
            ));
        }
        if !(self.sigma_write >= 0.0 && self.sigma_read >= 0.0) {
            return domain("noise sigmas must be non-negative");
        }
        if !(self.pulse_width > 0.0) {
            return domain("pulse width must be positive");
        }
        Ok(())
    }

    /// Conductance distance between adjacent levels.
    pub fn level_spacing(&self) -> f64 {
        (self.g_max - self.g_min) / f64::from(NUM_LEVELS - 1)
    }

    pub fn g_range(&self) -> f64 {
        self.g_max - self.g_min
    }
}

/// A 4-bit conductance level code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LevelCode(u8);

impl LevelCode {
    pub const MIN: LevelCode = LevelCode(0);
    pub const MAX: LevelCode = LevelCode(NUM_LEVELS - 1);

    pub fn new(level: u8) -> Result<Self> {
        if level < NUM_LEVELS {
            Ok(Self(level))
        } else {
            domain(format!("level {level} outside [0, {}]", NUM_LEVELS - 1))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = LevelCode> {
        (0..NUM_LEVELS).map(LevelCode)
    }
}

impl TryFrom<u8> for LevelCode {
    type Error = crate::Error;
    fn try_from(v: u8) -> Result<Self> {
        LevelCode::new(v)
    }
}

/// Analog state of one cell. `x` and `g` are kept consistent by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceState {
    x: f64,
    g: f64,
}

impl DeviceState {
    /// State with filament variable `x` (clamped into `[0, 1]`).
    pub fn from_x(x: f64, params: &DeviceParams) -> Self {
        let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
        Self {
            x,
            g: params.g_min + x * params.g_range(),
        }
    }

    /// Fully reset cell (level 0).
    pub fn fresh(params: &DeviceParams) -> Self {
        Self::from_x(0.0, params)
    }

    /// State sitting exactly on a level's nominal conductance.
    pub fn at_level(level: LevelCode, params: &DeviceParams) -> Self {
        Self::from_x(f64::from(level.get()) / f64::from(NUM_LEVELS - 1), params)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    /// Noise-free conductance in siemens.
    pub fn g(&self) -> f64 {
        self.g
    }
}

fn write_noise<R: Rng + ?Sized>(params: &DeviceParams, rng: &mut R) -> f64 {
    if params.sigma_write > 0.0 {
        LogNormal::new(0.0, params.sigma_write)
            .expect("validated sigma")
            .sample(rng)
    } else {
        1.0
    }
}

fn overdrive(alpha: f64, beta: f64, v: f64, v_th: f64) -> f64 {
    if v <= v_th {
        0.0
    } else {
        alpha * ((beta * (v - v_th)).exp() - 1.0).max(0.0)
    }
}

/// One SET pulse at gate voltage `v_g`. Sub-threshold pulses leave the state
/// bit-identical and draw no randomness.
pub fn apply_set_pulse<R: Rng + ?Sized>(
    state: DeviceState,
    v_g: f64,
    params: &DeviceParams,
    rng: &mut R,
) -> DeviceState {
    let rate = overdrive(
        params.alpha_set,
        params.beta_set,
        v_g.max(0.0),
        params.v_th_set,
    );
    if rate == 0.0 {
        return state;
    }
    let dx = rate * (1.0 - state.x) * write_noise(params, rng);
    DeviceState::from_x(state.x + dx, params)
}

/// One RESET pulse at source-line voltage `v_sl`.
pub fn apply_reset_pulse<R: Rng + ?Sized>(
    state: DeviceState,
    v_sl: f64,
    params: &DeviceParams,
    rng: &mut R,
) -> DeviceState {
    let rate = overdrive(
        params.alpha_reset,
        params.beta_reset,
        v_sl.max(0.0),
        params.v_th_reset,
    );
    if rate == 0.0 {
        return state;
    }
    let dx = rate * state.x * write_noise(params, rng);
    DeviceState::from_x(state.x - dx, params)
}

/// Verify/compute read: `g * (1 + eps)`, clamped to the device range.
pub fn read_conductance<R: Rng + ?Sized>(
    state: &DeviceState,
    params: &DeviceParams,
    rng: &mut R,
) -> f64 {
    if params.sigma_read == 0.0 {
        return state.g;
    }
    let eps: f64 = Normal::new(0.0, params.sigma_read)
        .expect("validated sigma")
        .sample(rng);
    (state.g * (1.0 + eps)).clamp(params.g_min, params.g_max)
}

pub fn level_to_conductance(level: LevelCode, params: &DeviceParams) -> f64 {
    params.g_min + f64::from(level.get()) * params.level_spacing()
}

/// Nearest level, ties toward the lower level.
pub fn conductance_to_level(g: f64, params: &DeviceParams) -> Result<LevelCode> {
    // a few ulps of slack so that round-tripped endpoints are accepted
    let slack = 1e-9 * params.g_max;
    if !(g >= params.g_min - slack && g <= params.g_max + slack) {
        return domain(format!(
            "conductance {g:e} outside [{:e}, {:e}]",
            params.g_min, params.g_max
        ));
    }
    // distances within rounding noise of each other count as a tie
    let eps = 1e-9 * params.level_spacing();
    let mut best = LevelCode::MIN;
    let mut best_d = f64::INFINITY;
    for level in LevelCode::all() {
        let d = (g - level_to_conductance(level, params)).abs();
        if d < best_d - eps {
            best = level;
            best_d = d;
        }
    }
    Ok(best)
}
