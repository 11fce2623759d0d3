//! Multinomial logistic regression with an L2 penalty on standardised
//! features. The intercepts are not penalised.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::linalg::Standardizer;
use super::linear::fold_ids;
use super::optim::{minimize, LbfgsOptions};
use super::{penalty_grid, Penalty};
use crate::data::Matrix;
use crate::math;
use crate::seed::SeedSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    std: Standardizer,
    /// `C x (d + 1)` row-major, intercept last.
    weights: Vec<f64>,
    num_classes: usize,
}

fn softmax_into(z: &mut [f64]) {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = math::exp(*v - m);
        s += *v;
    }
    z.iter_mut().for_each(|v| *v /= s);
}

impl LogisticModel {
    fn scores(&self, xs: &[f64], out: &mut [f64]) {
        let w = xs.len() + 1;
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.weights[k * w..(k + 1) * w];
            *o = row[w - 1] + xs.iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> Vec<f64> {
        let mut xs = alloc::vec![0.0; x.len()];
        self.std.transform_row(x, &mut xs);
        let mut z = alloc::vec![0.0; self.num_classes];
        self.scores(&xs, &mut z);
        softmax_into(&mut z);
        z
    }
}

/// Minimises `(1/n) [Σ -log p(y_i) + (λ/2) ||W||²]`.
fn fit_fixed(x: &Matrix, labels: &[usize], c: usize, lambda: f64) -> LogisticModel {
    let std = Standardizer::fit(x);
    let xs = std.transform(x);
    let (n, d) = (x.rows(), x.cols());
    let w = d + 1;
    let inv_n = 1.0 / n as f64;
    let objective = |params: &[f64], grad: &mut [f64]| {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        let mut z = alloc::vec![0.0; c];
        for i in 0..n {
            let r = xs.row(i);
            for (k, zk) in z.iter_mut().enumerate() {
                let row = &params[k * w..(k + 1) * w];
                *zk = row[d] + r.iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
            }
            let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + math::ln(z.iter().map(|v| math::exp(v - m)).sum::<f64>());
            loss += lse - z[labels[i]];
            for k in 0..c {
                let p = math::exp(z[k] - lse);
                let e = p - f64::from(u8::from(labels[i] == k));
                let gk = &mut grad[k * w..(k + 1) * w];
                for j in 0..d {
                    gk[j] += e * r[j];
                }
                gk[d] += e;
            }
        }
        let mut pen = 0.0;
        for k in 0..c {
            for j in 0..d {
                let v = params[k * w + j];
                pen += v * v;
                grad[k * w + j] += lambda * v;
            }
        }
        grad.iter_mut().for_each(|g| *g *= inv_n);
        (loss + 0.5 * lambda * pen) * inv_n
    };
    let weights = minimize(objective, alloc::vec![0.0; c * w], &LbfgsOptions::default());
    LogisticModel {
        std,
        weights,
        num_classes: c,
    }
}

pub fn fit_logistic(
    x: &Matrix,
    labels: &[usize],
    num_classes: usize,
    penalty: Penalty,
    seed: SeedSpec,
) -> (LogisticModel, f64) {
    let lambda = match penalty {
        Penalty::Fixed(l) => l,
        Penalty::Cv { folds } => {
            let grid = penalty_grid();
            if x.rows() < 2 * folds {
                grid[grid.len() / 2]
            } else {
                let ids = fold_ids(x.rows(), folds, seed);
                let mut err = alloc::vec![0.0; grid.len()];
                for f in 0..folds {
                    let tr: Vec<usize> = (0..x.rows()).filter(|&i| ids[i] != f).collect();
                    let xt = x.select_rows(&tr);
                    let yt: Vec<usize> = tr.iter().map(|&i| labels[i]).collect();
                    for (g, &l) in grid.iter().enumerate() {
                        let m = fit_fixed(&xt, &yt, num_classes, l);
                        for i in (0..x.rows()).filter(|&i| ids[i] == f) {
                            let p = m.predict_row(x.row(i))[labels[i]];
                            err[g] -= math::ln(p.max(1e-15));
                        }
                    }
                }
                let mut best = 0;
                for g in 0..grid.len() {
                    if err[g] < err[best] {
                        best = g;
                    }
                }
                grid[best]
            }
        }
    };
    (fit_fixed(x, labels, num_classes, lambda), lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn separable_data_is_learned() {
        let mut rng = SeedSpec::new(11).rng();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..200 {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            labels.push(usize::from(a + b > 0.0));
            rows.push([a, b]);
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let (m, _) = fit_logistic(&x, &labels, 2, Penalty::Cv { folds: 3 }, SeedSpec::new(0));
        let correct = (0..200)
            .filter(|&i| {
                let p = m.predict_row(x.row(i));
                usize::from(p[1] > p[0]) == labels[i]
            })
            .count();
        assert!(correct >= 190);
    }

    #[test]
    fn heavy_penalty_gives_class_frequencies() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let (m, _) = fit_logistic(&x, &[0, 0, 0, 1], 2, Penalty::Fixed(1e9), SeedSpec::new(0));
        let p = m.predict_row(&[1.5]);
        assert!((p[0] - 0.75).abs() < 1e-4, "{p:?}");
    }
}
