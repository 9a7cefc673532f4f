//! Steady-state emulation of the four circuit topologies.
//!
//! Each solve takes exactly one noisy read of every participating array and
//! then evaluates the operating point algebraically:
//!
//! * MVM:  `v = -R_f * G^T v_in`
//! * INV:  `G v = -v_in / R_in`
//! * PINV: `(G_t G) v = -G_t v_in / R_in`, with `G_t` read from the second array
//! * EGV:  `(G - lambda I) v = 0`, smallest right singular vector
//!
//! Outputs are clipped at the rails afterwards and every clipped component
//! is flagged.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::topology::{TopologyConfig, TopologyKind};
use crate::crossbar::CrossbarArray;
use crate::error::{domain, Error, Result};

/// Relative pivot threshold below which a matrix counts as singular.
pub const SINGULAR_PIVOT: f64 = 1e-12;
/// `sigma_min(G - lambda I) / ||G||_2` above which lambda is rejected.
pub const EIGEN_GAP_LIMIT: f64 = 0.05;
/// Condition number above which feasibility checks raise a flag.
pub const ILL_CONDITIONED: f64 = 1e6;

/// Anything that yields a conductance matrix when read.
pub trait ConductanceSource {
    fn shape(&self) -> (usize, usize);
    /// One read, with noise if the source has any.
    fn read<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64>;
    /// Noise-free conductances.
    fn nominal(&self) -> DMatrix<f64>;
    fn is_noisy(&self) -> bool;
}

impl ConductanceSource for CrossbarArray {
    fn shape(&self) -> (usize, usize) {
        CrossbarArray::shape(self)
    }
    fn read<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        self.read_conductance_matrix(rng)
    }
    fn nominal(&self) -> DMatrix<f64> {
        self.conductance_matrix()
    }
    fn is_noisy(&self) -> bool {
        self.params().sigma_read > 0.0
    }
}

/// Exact conductances with no device behind them.
impl ConductanceSource for DMatrix<f64> {
    fn shape(&self) -> (usize, usize) {
        DMatrix::shape(self)
    }
    fn read<R: Rng + ?Sized>(&self, _rng: &mut R) -> DMatrix<f64> {
        self.clone()
    }
    fn nominal(&self) -> DMatrix<f64> {
        self.clone()
    }
    fn is_noisy(&self) -> bool {
        false
    }
}

/// A positive/negative array pair combined through the analog inverter:
/// the effective matrix is `G_pos - G_neg`. The positive array is read first.
#[derive(Debug, Clone, Copy)]
pub struct Differential<'a> {
    pub pos: &'a CrossbarArray,
    pub neg: &'a CrossbarArray,
}

impl ConductanceSource for Differential<'_> {
    fn shape(&self) -> (usize, usize) {
        self.pos.shape()
    }
    fn read<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        let p = self.pos.read_conductance_matrix(rng);
        let n = self.neg.read_conductance_matrix(rng);
        p - n
    }
    fn nominal(&self) -> DMatrix<f64> {
        self.pos.conductance_matrix() - self.neg.conductance_matrix()
    }
    fn is_noisy(&self) -> bool {
        self.pos.is_noisy() || self.neg.is_noisy()
    }
}

/// A single array whose `g_min` floor is cancelled by a reference column,
/// so level 0 acts as zero conductance.
#[derive(Debug, Clone, Copy)]
pub struct FloorCancelled<'a>(pub &'a CrossbarArray);

impl ConductanceSource for FloorCancelled<'_> {
    fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }
    fn read<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        self.0
            .read_conductance_matrix(rng)
            .add_scalar(-self.0.params().g_min)
    }
    fn nominal(&self) -> DMatrix<f64> {
        self.0
            .conductance_matrix()
            .add_scalar(-self.0.params().g_min)
    }
    fn is_noisy(&self) -> bool {
        self.0.is_noisy()
    }
}

/// A single floor-cancelled array or a differential pair, chosen at runtime.
#[derive(Debug, Clone, Copy)]
pub enum ArrayOperand<'a> {
    Single(FloorCancelled<'a>),
    Pair(Differential<'a>),
}

impl<'a> ArrayOperand<'a> {
    pub fn new(pos: &'a CrossbarArray, neg: Option<&'a CrossbarArray>) -> Self {
        match neg {
            Some(neg) => Self::Pair(Differential { pos, neg }),
            None => Self::Single(FloorCancelled(pos)),
        }
    }
}

impl ConductanceSource for ArrayOperand<'_> {
    fn shape(&self) -> (usize, usize) {
        match self {
            Self::Single(s) => s.shape(),
            Self::Pair(p) => p.shape(),
        }
    }
    fn read<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        match self {
            Self::Single(s) => s.read(rng),
            Self::Pair(p) => p.read(rng),
        }
    }
    fn nominal(&self) -> DMatrix<f64> {
        match self {
            Self::Single(s) => s.nominal(),
            Self::Pair(p) => p.nominal(),
        }
    }
    fn is_noisy(&self) -> bool {
        match self {
            Self::Single(s) => s.is_noisy(),
            Self::Pair(p) => p.is_noisy(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogResult {
    pub v_out: DVector<f64>,
    pub saturated: Vec<bool>,
    /// INV/PINV: 1-norm condition number of the solved matrix. EGV: the
    /// residual `||(G - lambda I) v|| / ||v||`. MVM: NaN.
    pub condition_estimate: f64,
    pub noise_sampled: bool,
}

impl AnalogResult {
    fn clipped(
        pre: DVector<f64>,
        v_rail: f64,
        condition_estimate: f64,
        noise_sampled: bool,
    ) -> Self {
        let saturated: Vec<bool> = pre.iter().map(|v| v.abs() > v_rail).collect();
        let v_out = pre.map(|v| v.clamp(-v_rail, v_rail));
        Self {
            v_out,
            saturated,
            condition_estimate,
            noise_sampled,
        }
    }

    pub fn any_saturated(&self) -> bool {
        self.saturated.iter().any(|&s| s)
    }

    /// `index,v_out,saturated` rows followed by a `condition_estimate` line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,v_out,saturated\n");
        for (i, (v, s)) in self.v_out.iter().zip(&self.saturated).enumerate() {
            out.push_str(&format!("{i},{v:e},{}\n", u8::from(*s)));
        }
        out.push_str(&format!(
            "condition_estimate,{:e},\n",
            self.condition_estimate
        ));
        out
    }
}

fn expect_kind(cfg: &TopologyConfig, kind: TopologyKind) -> Result<()> {
    cfg.validate()?;
    if cfg.kind != kind {
        return Err(Error::Config(format!(
            "macro configured as {} but {} requested",
            cfg.kind, kind
        )));
    }
    Ok(())
}

/// LU solve with the singularity screen; returns the solution and the
/// 1-norm condition number of `m`.
pub(crate) fn checked_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let scale = m.amax();
    if scale == 0.0 {
        return Err(Error::SingularMatrix {
            pivot: 0.0,
            threshold: 0.0,
        });
    }
    let threshold = SINGULAR_PIVOT * scale;
    let lu = m.clone().lu();
    let pivot = lu.u().diagonal().amin();
    if !(pivot >= threshold) {
        return Err(Error::SingularMatrix { pivot, threshold });
    }
    let x = lu
        .solve(rhs)
        .ok_or(Error::SingularMatrix { pivot, threshold })?;
    let inv = lu
        .try_inverse()
        .ok_or(Error::SingularMatrix { pivot, threshold })?;
    Ok((x, norm1(m) * norm1(&inv)))
}

pub(crate) fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn solve_mvm<S: ConductanceSource, R: Rng + ?Sized>(
    src: &S,
    v_in: &DVector<f64>,
    cfg: &TopologyConfig,
    rng: &mut R,
) -> Result<AnalogResult> {
    expect_kind(cfg, TopologyKind::Mvm)?;
    let (m, _) = src.shape();
    if v_in.len() != m {
        return domain(format!(
            "MVM input length {} does not match {m} rows",
            v_in.len()
        ));
    }
    let g = src.read(rng);
    let pre = g.tr_mul(v_in) * -cfg.tia_gain;
    Ok(AnalogResult::clipped(
        pre,
        cfg.v_rail,
        f64::NAN,
        src.is_noisy(),
    ))
}

pub fn solve_inv<S: ConductanceSource, R: Rng + ?Sized>(
    src: &S,
    b: &DVector<f64>,
    cfg: &TopologyConfig,
    rng: &mut R,
) -> Result<AnalogResult> {
    expect_kind(cfg, TopologyKind::Inv)?;
    let (m, n) = src.shape();
    if m != n {
        return domain(format!("INV needs a square region, got {m}x{n}"));
    }
    if b.len() != n {
        return domain(format!("INV input length {} does not match {n}", b.len()));
    }
    let g = src.read(rng);
    let i_in = b / cfg.tia_gain;
    let (v, cond) = checked_solve(&g, &(-i_in))?;
    Ok(AnalogResult::clipped(v, cfg.v_rail, cond, src.is_noisy()))
}

/// `src_a` holds `A` (m x n, m >= n), `src_at` holds `A^T` (n x m).
pub fn solve_pinv<S: ConductanceSource, T: ConductanceSource, R: Rng + ?Sized>(
    src_a: &S,
    src_at: &T,
    b: &DVector<f64>,
    cfg: &TopologyConfig,
    rng: &mut R,
) -> Result<AnalogResult> {
    expect_kind(cfg, TopologyKind::Pinv)?;
    let (m, n) = src_a.shape();
    if src_at.shape() != (n, m) {
        return domain(format!(
            "transposed array is {:?}, expected {:?}",
            src_at.shape(),
            (n, m)
        ));
    }
    if m < n {
        return domain(format!("PINV needs rows >= cols, got {m}x{n}"));
    }
    if b.len() != m {
        return domain(format!("PINV input length {} does not match {m}", b.len()));
    }
    let a = src_a.read(rng);
    let at = src_at.read(rng);
    let normal = &at * &a;
    let rhs = -(&at * (b / cfg.tia_gain));
    let (v, cond) = checked_solve(&normal, &rhs)?;
    Ok(AnalogResult::clipped(
        v,
        cfg.v_rail,
        cond,
        src_a.is_noisy() || src_at.is_noisy(),
    ))
}

/// Smallest right singular vector of `m` with its singular value.
pub(crate) fn smallest_singular_pair(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let svd = m.clone().svd(false, true);
    let (k, sigma) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty matrix");
    let v_t = svd.v_t.expect("requested V^T");
    (sigma, v_t.row(k).transpose())
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

pub fn solve_egv<S: ConductanceSource, R: Rng + ?Sized>(
    src: &S,
    cfg: &TopologyConfig,
    rng: &mut R,
) -> Result<AnalogResult> {
    expect_kind(cfg, TopologyKind::Egv)?;
    let (m, n) = src.shape();
    if m != n {
        return domain(format!("EGV needs a square region, got {m}x{n}"));
    }
    let g = src.read(rng);
    let shifted = &g - DMatrix::identity(n, n) * cfg.lambda;
    let (sigma_min, mut v) = smallest_singular_pair(&shifted);
    let limit = EIGEN_GAP_LIMIT * spectral_norm(&g);
    if sigma_min > limit {
        return Err(Error::NotAnEigenvalue { sigma_min, limit });
    }
    let peak = v
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(1.0);
    if peak != 0.0 {
        v /= peak;
    }
    let residual = (&shifted * &v).norm() / v.norm();
    Ok(AnalogResult::clipped(
        v,
        cfg.v_rail,
        residual,
        src.is_noisy(),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub condition_estimate: f64,
    /// Largest |v_out| predicted for a unit (1 V on every input) excitation.
    pub predicted_max_output: f64,
    pub saturation_predicted: bool,
    pub ill_conditioned: bool,
    /// INV/PINV: the symmetric part of the solved matrix is not positive
    /// definite, so the feedback loop is not guaranteed to settle.
    pub stability_advisory: bool,
}

/// Pre-flight screen on one read of the configured arrays.
pub fn check_feasibility<S: ConductanceSource, R: Rng + ?Sized>(
    src: &S,
    cfg: &TopologyConfig,
    rng: &mut R,
) -> Diagnostics {
    let g = src.read(rng);
    let (m, n) = g.shape();
    let square_cond = |mat: &DMatrix<f64>| match mat.clone().try_inverse() {
        Some(inv) => norm1(mat) * norm1(&inv),
        None => f64::INFINITY,
    };
    let svd_cond = |mat: &DMatrix<f64>| {
        let s = mat.clone().svd(false, false).singular_values;
        let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = s.iter().copied().fold(0.0, f64::max);
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    };
    let condition_estimate = if m == n {
        square_cond(&g)
    } else {
        svd_cond(&g)
    };
    let ill = !(condition_estimate <= ILL_CONDITIONED);
    let pd = |mat: &DMatrix<f64>| ((mat + mat.transpose()) * 0.5).cholesky().is_some();
    let (predicted, advisory) = match cfg.kind {
        TopologyKind::Mvm => (cfg.tia_gain * norm_inf(&g.transpose()), false),
        TopologyKind::Inv if m == n => {
            let pred = g
                .clone()
                .try_inverse()
                .map(|inv| norm_inf(&inv) / cfg.tia_gain)
                .unwrap_or(f64::INFINITY);
            (pred, !pd(&g))
        }
        TopologyKind::Pinv => {
            let normal = g.transpose() * &g;
            let pred = normal
                .clone()
                .try_inverse()
                .map(|inv| norm_inf(&(inv * g.transpose())) / cfg.tia_gain)
                .unwrap_or(f64::INFINITY);
            (pred, !pd(&normal))
        }
        TopologyKind::Egv => (1.0, false),
        TopologyKind::Inv => (f64::INFINITY, true),
    };
    let _ = n;
    Diagnostics {
        condition_estimate,
        predicted_max_output: predicted,
        saturation_predicted: !(predicted <= cfg.v_rail),
        ill_conditioned: ill,
        stability_advisory: advisory,
    }
}
