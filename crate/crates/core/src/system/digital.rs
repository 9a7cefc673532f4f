//! Digital functional units: comparison, pooling, activation, image-to-column
//! lowering and the power-iteration assist for EGV.

use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Result};

/// Channel-major (`c, h, w`) feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return domain(format!(
                "feature map {channels}x{height}x{width} needs {} values, got {}",
                channels * height * width,
                data.len()
            ));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    fn at_mut(&mut self, c: usize, y: usize, x: usize) -> &mut f64 {
        &mut self.data[(c * self.height + y) * self.width + x]
    }

    /// Row-major flattening in `(c, h, w)` order.
    pub fn flatten(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.data)
    }

    /// Rebuilds a map from an MVM output matrix whose rows are spatial
    /// positions (row-major) and columns are channels.
    pub fn from_positions(m: &DMatrix<f64>, height: usize, width: usize) -> Result<Self> {
        if m.nrows() != height * width {
            return domain(format!(
                "{} positions cannot form a {height}x{width} map",
                m.nrows()
            ));
        }
        let mut out = Self::zeros(m.ncols(), height, width);
        for c in 0..m.ncols() {
            for p in 0..m.nrows() {
                *out.at_mut(c, p / width, p % width) = m[(p, c)];
            }
        }
        Ok(out)
    }
}

/// Comparison unit: `|readout - ideal| <= tol` (closed interval) per element.
pub fn comparison_unit(
    readout: &DMatrix<f64>,
    ideal: &DMatrix<f64>,
    tol: f64,
) -> Result<DMatrix<bool>> {
    if readout.shape() != ideal.shape() {
        return domain(format!(
            "shape mismatch {:?} vs {:?}",
            readout.shape(),
            ideal.shape()
        ));
    }
    Ok(readout.zip_map(ideal, |a, b| (a - b).abs() <= tol))
}

pub fn max_pool_2x2(map: &FeatureMap) -> Result<FeatureMap> {
    if !map.height.is_multiple_of(2) || !map.width.is_multiple_of(2) {
        return domain(format!(
            "2x2 pooling needs even dimensions, got {}x{}",
            map.height, map.width
        ));
    }
    let (h, w) = (map.height / 2, map.width / 2);
    let mut out = FeatureMap::zeros(map.channels, h, w);
    for c in 0..map.channels {
        for y in 0..h {
            for x in 0..w {
                let m = map
                    .at(c, 2 * y, 2 * x)
                    .max(map.at(c, 2 * y, 2 * x + 1))
                    .max(map.at(c, 2 * y + 1, 2 * x))
                    .max(map.at(c, 2 * y + 1, 2 * x + 1));
                *out.at_mut(c, y, x) = m;
            }
        }
    }
    Ok(out)
}

pub fn relu(v: &DVector<f64>) -> DVector<f64> {
    v.map(|x| x.max(0.0))
}

/// Valid, stride-1 patches: one row per output position (row-major), columns
/// ordered `(c, ky, kx)` to match an `out x in x k x k` weight layout.
pub fn im2col(map: &FeatureMap, kernel: usize) -> Result<DMatrix<f64>> {
    if kernel == 0 || kernel > map.height || kernel > map.width {
        return domain(format!(
            "kernel {kernel} does not fit a {}x{} map",
            map.height, map.width
        ));
    }
    let (oh, ow) = (map.height - kernel + 1, map.width - kernel + 1);
    let cols = map.channels * kernel * kernel;
    let mut out = DMatrix::zeros(oh * ow, cols);
    for y in 0..oh {
        for x in 0..ow {
            let row = y * ow + x;
            let mut k = 0;
            for c in 0..map.channels {
                for ky in 0..kernel {
                    for kx in 0..kernel {
                        out[(row, k)] = map.at(c, y + ky, x + kx);
                        k += 1;
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Dominant eigenvalue by power iteration with Rayleigh-quotient estimates.
/// Stops once `|lambda_k - lambda_{k-1}| <= tol |lambda_k|`.
pub fn power_iteration(m: &DMatrix<f64>, iters: usize, tol: f64) -> Result<PowerIteration> {
    if !m.is_square() || m.is_empty() {
        return domain("power iteration needs a non-empty square matrix");
    }
    let n = m.nrows();
    let mut v = DVector::from_fn(n, |i, _| {
        1.0 + 1e-3 * ((i as f64) * 0.618_033_988_75).fract()
    });
    v /= v.norm();
    let mut lambda = v.dot(&(m * &v));
    for k in 1..=iters {
        let w = m * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(PowerIteration {
                lambda: 0.0,
                iterations: k,
                converged: true,
            });
        }
        v = w / norm;
        let next = v.dot(&(m * &v));
        let done = (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        if done {
            return Ok(PowerIteration {
                lambda,
                iterations: k,
                converged: true,
            });
        }
    }
    Ok(PowerIteration {
        lambda,
        iterations: iters,
        converged: false,
    })
}
