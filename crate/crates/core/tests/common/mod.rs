//! Reference implementations used only by tests. They work on plain
//! `Vec<Vec<f64>>` rows and share no code with the library.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

pub type Rows = Vec<Vec<f64>>;

pub fn rows(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

pub fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// `out[j] = sum_i g[i][j] v[i]`.
pub fn matvec_t(g: &Rows, v: &[f64]) -> Vec<f64> {
    let cols = g[0].len();
    let mut out = vec![0.0; cols];
    for j in 0..cols {
        let mut acc = 0.0;
        for (i, row) in g.iter().enumerate() {
            acc += row[j] * v[i];
        }
        out[j] = acc;
    }
    out
}

pub fn matvec(a: &Rows, x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

pub fn transpose(a: &Rows) -> Rows {
    (0..a[0].len())
        .map(|j| a.iter().map(|r| r[j]).collect())
        .collect()
}

pub fn matmul(a: &Rows, b: &Rows) -> Rows {
    let n = b[0].len();
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum())
                .collect()
        })
        .collect()
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &Rows, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut m: Rows = a
        .iter()
        .zip(b)
        .map(|(r, &bi)| {
            let mut row = r.clone();
            row.push(bi);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col] == 0.0 {
            return None;
        }
        m.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..=n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    Some(x)
}

/// Least squares through the normal equations.
pub fn least_squares(a: &Rows, b: &[f64]) -> Option<Vec<f64>> {
    let at = transpose(a);
    gauss_solve(&matmul(&at, a), &matvec(&at, b))
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix:
/// `(eigenvalues, eigenvectors as columns)`.
pub fn jacobi_eigen(s: &Rows) -> (Vec<f64>, Rows) {
    let n = s.len();
    let mut a = s.clone();
    let mut v: Rows = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - sn * akq;
                    a[k][q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - sn * aqk;
                    a[q][k] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - sn * vkq;
                    v[k][q] = sn * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Dominant (largest) eigenpair, vector scaled so its largest-magnitude entry is +1.
pub fn dominant_eigen(s: &Rows) -> (f64, Vec<f64>) {
    let (vals, vecs) = jacobi_eigen(s);
    let k = (0..vals.len())
        .max_by(|&i, &j| vals[i].total_cmp(&vals[j]))
        .unwrap();
    let col: Vec<f64> = vecs.iter().map(|r| r[k]).collect();
    (vals[k], peak_normalize(&col))
}

pub fn peak_normalize(v: &[f64]) -> Vec<f64> {
    let p = v
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap();
    v.iter().map(|x| x / p).collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).abs()
}

/// `max |a - b| / max |b|`.
pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let d = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        d
    } else {
        d / scale
    }
}

/// Median of `|a - r| / |r|` over entries with `|r| >= 1%` of `max |r|`.
pub fn median_rel_error(analog: &[f64], reference: &[f64]) -> f64 {
    let floor = 0.01 * reference.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut e: Vec<f64> = analog
        .iter()
        .zip(reference)
        .filter(|(_, r)| r.abs() >= floor && **r != 0.0)
        .map(|(a, r)| (a - r).abs() / r.abs())
        .collect();
    median(&mut e)
}

pub fn rel_errors(analog: &[f64], reference: &[f64]) -> Vec<f64> {
    let floor = 0.01 * reference.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    analog
        .iter()
        .zip(reference)
        .filter(|(_, r)| r.abs() >= floor && **r != 0.0)
        .map(|(a, r)| (a - r).abs() / r.abs())
        .collect()
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// CNN forward pass over flat arrays: conv (valid) -> relu -> 2x2 max pool
/// for conv layers, relu after every fc layer but the last.
pub struct OracleLayer<'a> {
    pub conv: bool,
    pub out_ch: usize,
    pub in_ch: usize,
    pub k: usize,
    pub weights: &'a [f64],
    pub bias: &'a [f64],
}

pub fn cnn_forward(layers: &[OracleLayer<'_>], image: &[f64], size: usize) -> Vec<f64> {
    let (mut ch, mut h, mut w) = (1usize, size, size);
    let mut act = image.to_vec();
    for (li, l) in layers.iter().enumerate() {
        if l.conv {
            let (oh, ow) = (h - l.k + 1, w - l.k + 1);
            let mut y = vec![0.0; l.out_ch * oh * ow];
            for o in 0..l.out_ch {
                for yy in 0..oh {
                    for xx in 0..ow {
                        let mut acc = l.bias[o];
                        for c in 0..ch {
                            for ky in 0..l.k {
                                for kx in 0..l.k {
                                    let wi = ((o * l.in_ch + c) * l.k + ky) * l.k + kx;
                                    acc += l.weights[wi] * act[(c * h + yy + ky) * w + xx + kx];
                                }
                            }
                        }
                        y[(o * oh + yy) * ow + xx] = acc.max(0.0);
                    }
                }
            }
            let (ph, pw) = (oh / 2, ow / 2);
            let mut p = vec![f64::NEG_INFINITY; l.out_ch * ph * pw];
            for o in 0..l.out_ch {
                for yy in 0..oh {
                    for xx in 0..ow {
                        let t = &mut p[(o * ph + yy / 2) * pw + xx / 2];
                        *t = t.max(y[(o * oh + yy) * ow + xx]);
                    }
                }
            }
            act = p;
            ch = l.out_ch;
            h = ph;
            w = pw;
        } else {
            let last = li == layers.len() - 1;
            act = (0..l.out_ch)
                .map(|o| {
                    let s: f64 = l.bias[o]
                        + (0..l.in_ch)
                            .map(|i| l.weights[o * l.in_ch + i] * act[i])
                            .sum::<f64>();
                    if last {
                        s
                    } else {
                        s.max(0.0)
                    }
                })
                .collect();
        }
    }
    act
}
