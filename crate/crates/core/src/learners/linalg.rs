//! Small dense helpers: column standardisation and a cyclic Jacobi
//! eigensolver for symmetric matrices.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::math;

/// Per-column centring and scaling. Constant columns keep scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub constant: Vec<bool>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let (n, d) = (x.rows(), x.cols());
        let mut means = alloc::vec![0.0; d];
        for i in 0..n {
            for (j, m) in means.iter_mut().enumerate() {
                *m += x.get(i, j);
            }
        }
        means.iter_mut().for_each(|m| *m /= n as f64);
        let mut vars = alloc::vec![0.0; d];
        for i in 0..n {
            for j in 0..d {
                let c = x.get(i, j) - means[j];
                vars[j] += c * c;
            }
        }
        let mut scales = Vec::with_capacity(d);
        let mut constant = Vec::with_capacity(d);
        for j in 0..d {
            let sd = math::sqrt(vars[j] / n as f64);
            let is_const = !(sd > 1e-12 * (1.0 + math::abs(means[j])));
            constant.push(is_const);
            scales.push(if is_const { 1.0 } else { sd });
        }
        Standardizer {
            means,
            scales,
            constant,
        }
    }

    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) {
        for j in 0..row.len() {
            out[j] = if self.constant[j] {
                0.0
            } else {
                (row[j] - self.means[j]) / self.scales[j]
            };
        }
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), x.cols());
        let mut buf = alloc::vec![0.0; x.cols()];
        for i in 0..x.rows() {
            self.transform_row(x.row(i), &mut buf);
            for (j, &v) in buf.iter().enumerate() {
                out.set(i, j, v);
            }
        }
        out
    }
}

/// Eigen-decomposition of a symmetric `d x d` matrix (row-major).
/// `vectors[k]` is the unit eigenvector for `values[k]`.
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub fn sym_eigen(a: &[f64], d: usize) -> SymEigen {
    let mut m = a.to_vec();
    // v[i*d + k]: component i of eigenvector k
    let mut v = alloc::vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off += m[p * d + q] * m[p * d + q];
            }
        }
        if off <= 1e-30 * scale || off == 0.0 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * d + p];
                let aqq = m[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + math::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + math::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..d {
                    let mkp = m[k * d + p];
                    let mkq = m[k * d + q];
                    m[k * d + p] = c * mkp - s * mkq;
                    m[k * d + q] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let mpk = m[p * d + k];
                    let mqk = m[q * d + k];
                    m[p * d + k] = c * mpk - s * mqk;
                    m[q * d + k] = s * mpk + c * mqk;
                }
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..d).map(|k| m[k * d + k]).collect();
    let vectors = (0..d).map(|k| (0..d).map(|i| v[i * d + k]).collect()).collect();
    SymEigen { values, vectors }
}

/// `XᵀX` (row-major `d x d`) and `Xᵀy` of a standardised design.
pub fn gram(x: &Matrix, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = x.cols();
    let mut g = alloc::vec![0.0; d * d];
    let mut xty = alloc::vec![0.0; d];
    for i in 0..x.rows() {
        let r = x.row(i);
        for a in 0..d {
            xty[a] += r[a] * y[i];
            for b in a..d {
                g[a * d + b] += r[a] * r[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            g[a * d + b] = g[b * d + a];
        }
    }
    (g, xty)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
