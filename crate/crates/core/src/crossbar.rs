//! The 128x128 1T1R crosspoint array.
//!
//! Orientation: rows are the driven bit lines (voltage inputs), columns
//! collect current into virtual grounds, so `I_j = sum_i G_ij * V_i`.
//! Only the contiguous active region selected by the drivers participates in
//! reads and analog evaluations; every row/column index taken by the methods
//! below is relative to that region.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::device::{read_conductance, DeviceParams, DeviceState, LevelCode};
use crate::error::{domain, Result};

/// Physical array dimension.
pub const ARRAY_DIM: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActiveRegion {
    pub row_start: usize,
    pub row_count: usize,
    pub col_start: usize,
    pub col_count: usize,
}

impl ActiveRegion {
    pub fn full() -> Self {
        Self::new(0, ARRAY_DIM, 0, ARRAY_DIM)
    }

    pub fn new(row_start: usize, row_count: usize, col_start: usize, col_count: usize) -> Self {
        Self {
            row_start,
            row_count,
            col_start,
            col_count,
        }
    }

    /// `rows x cols` region anchored at the origin.
    pub fn sized(rows: usize, cols: usize) -> Self {
        Self::new(0, rows, 0, cols)
    }

    pub fn validate(&self) -> Result<()> {
        if self.row_count == 0 || self.col_count == 0 {
            return domain("active region must be at least 1x1");
        }
        if self.row_start + self.row_count > ARRAY_DIM
            || self.col_start + self.col_count > ARRAY_DIM
        {
            return domain(format!(
                "region rows {}..{} cols {}..{} exceeds {ARRAY_DIM}x{ARRAY_DIM} array (tiling across macros is not supported)",
                self.row_start,
                self.row_start + self.row_count,
                self.col_start,
                self.col_start + self.col_count
            ));
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.row_count, self.col_count)
    }
}

#[derive(Debug, Clone)]
pub struct CrossbarArray {
    cells: Vec<DeviceState>,
    params: DeviceParams,
    active: ActiveRegion,
}

impl CrossbarArray {
    /// Fresh array, every cell at level 0, full region active.
    pub fn new(params: DeviceParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            cells: vec![DeviceState::fresh(&params); ARRAY_DIM * ARRAY_DIM],
            params,
            active: ActiveRegion::full(),
        })
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn active(&self) -> ActiveRegion {
        self.active
    }

    pub fn shape(&self) -> (usize, usize) {
        self.active.shape()
    }

    pub fn select_region(&mut self, region: ActiveRegion) -> Result<()> {
        region.validate()?;
        self.active = region;
        Ok(())
    }

    pub fn with_region(mut self, region: ActiveRegion) -> Result<Self> {
        self.select_region(region)?;
        Ok(self)
    }

    fn index(&self, r: usize, c: usize) -> usize {
        debug_assert!(r < self.active.row_count && c < self.active.col_count);
        (self.active.row_start + r) * ARRAY_DIM + self.active.col_start + c
    }

    pub fn cell(&self, r: usize, c: usize) -> DeviceState {
        self.cells[self.index(r, c)]
    }

    pub fn set_cell(&mut self, r: usize, c: usize, state: DeviceState) {
        let i = self.index(r, c);
        self.cells[i] = state;
    }

    /// Places every active cell exactly on its target level (a perfect write).
    pub fn set_levels_ideal(&mut self, levels: &DMatrix<u8>) -> Result<()> {
        self.check_shape(levels.shape())?;
        for r in 0..levels.nrows() {
            for c in 0..levels.ncols() {
                let level = LevelCode::new(levels[(r, c)])?;
                let state = DeviceState::at_level(level, &self.params);
                self.set_cell(r, c, state);
            }
        }
        Ok(())
    }

    pub(crate) fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        if shape != self.shape() {
            return domain(format!(
                "matrix shape {shape:?} does not match active region {:?}",
                self.shape()
            ));
        }
        Ok(())
    }

    /// Noise-free conductances of the active region.
    pub fn conductance_matrix(&self) -> DMatrix<f64> {
        let (m, n) = self.shape();
        DMatrix::from_fn(m, n, |r, c| self.cell(r, c).g())
    }

    /// One verify read of the active region; noise is drawn per cell in
    /// row-major order.
    pub fn read_conductance_matrix<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        let (m, n) = self.shape();
        let mut g = DMatrix::zeros(m, n);
        for r in 0..m {
            for c in 0..n {
                g[(r, c)] = read_conductance(&self.cell(r, c), &self.params, rng);
            }
        }
        g
    }

    /// Column currents for row voltages `v_in` using one fresh noisy read.
    pub fn mvm_currents<R: Rng + ?Sized>(
        &self,
        v_in: &DVector<f64>,
        rng: &mut R,
    ) -> Result<DVector<f64>> {
        if v_in.len() != self.active.row_count {
            return domain(format!(
                "input length {} does not match {} active rows",
                v_in.len(),
                self.active.row_count
            ));
        }
        let g = self.read_conductance_matrix(rng);
        Ok(g.tr_mul(v_in))
    }
}
