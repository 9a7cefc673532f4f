//! Seeded test-matrix generators.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Result};

/// Standard deviation of the additive noise in [`regression`] responses.
pub const REGRESSION_NOISE: f64 = 0.1;

fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    // filled row by row so the draw order reads naturally
    let mut m = DMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = StandardNormal.sample(rng);
        }
    }
    m
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for r in 0..n {
        for c in r + 1..n {
            m[(c, r)] = m[(r, c)];
        }
    }
}

fn check_dim(name: &str, d: usize) -> Result<()> {
    if d == 0 {
        return domain(format!("{name} must be at least 1"));
    }
    Ok(())
}

/// `X X^T / n` with `X` an `n x n` standard-normal sample.
pub fn wishart(n: usize, seed: u64) -> Result<DMatrix<f64>> {
    check_dim("wishart size", n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = normal_matrix(n, n, &mut rng);
    let mut w = &x * x.transpose() / n as f64;
    symmetrize(&mut w);
    Ok(w)
}

/// Inner products of `n` unit-normalized standard-normal vectors in `R^n`.
pub fn gram(n: usize, seed: u64) -> Result<DMatrix<f64>> {
    check_dim("gram size", n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = normal_matrix(n, n, &mut rng);
    for mut row in x.row_iter_mut() {
        let norm = row.norm();
        row /= norm;
    }
    let mut g = &x * x.transpose();
    symmetrize(&mut g);
    for i in 0..n {
        g[(i, i)] = 1.0;
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regression {
    /// `m x n` design matrix.
    pub design: DMatrix<f64>,
    /// Planted coefficients.
    pub coef: DVector<f64>,
    pub response: DVector<f64>,
}

/// Standard-normal design, standard-normal planted coefficients and
/// responses `X beta + 0.1 N(0, 1)`.
pub fn regression(m: usize, n: usize, seed: u64) -> Result<Regression> {
    check_dim("regression rows", m)?;
    check_dim("regression cols", n)?;
    if m < n {
        return domain(format!("regression needs rows >= cols, got {m}x{n}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let design = normal_matrix(m, n, &mut rng);
    let coef = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let noise = DVector::from_fn(m, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        REGRESSION_NOISE * z
    });
    let response = &design * &coef + noise;
    Ok(Regression {
        design,
        coef,
        response,
    })
}

/// Uniform `[-1, 1]` vector.
pub fn uniform_vector(n: usize, seed: u64) -> DVector<f64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0))
}
