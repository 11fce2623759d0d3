//! Gradient-boosted regression trees. Squared loss for regression,
//! multinomial deviance with one tree per class per round for
//! classification.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::tree::{self, Targets, Tree, TreeParams};
use crate::data::{Matrix, Response};
use crate::math;
use crate::seed::SeedSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostingParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
}

impl Default for BoostingParams {
    fn default() -> Self {
        BoostingParams {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boosted {
    init: Vec<f64>,
    /// `rounds x width` trees, row-major.
    trees: Vec<Tree>,
    learning_rate: f64,
    classification: bool,
}

fn softmax(f: &[f64]) -> Vec<f64> {
    let m = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = f.iter().map(|v| math::exp(v - m)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl Boosted {
    pub fn fit(x: &Matrix, y: &Response, params: &BoostingParams) -> Self {
        let n = x.rows();
        let samples: Vec<usize> = (0..n).collect();
        let tp = TreeParams {
            max_depth: Some(params.max_depth),
            ..TreeParams::default()
        };
        // all features are used at every node, so the rng is never drawn from
        let mut rng = SeedSpec::new(0).rng();
        let lr = params.learning_rate;
        match y {
            Response::Continuous(v) => {
                let init = v.iter().sum::<f64>() / n as f64;
                let mut f = alloc::vec![init; n];
                let mut trees = Vec::with_capacity(params.n_rounds);
                let mut resid = alloc::vec![0.0; n];
                for _ in 0..params.n_rounds {
                    for i in 0..n {
                        resid[i] = v[i] - f[i];
                    }
                    let (t, _) = tree::build(x, Targets::Values(&resid), &samples, &tp, &mut rng);
                    for (i, fi) in f.iter_mut().enumerate() {
                        *fi += lr * t.predict_row(x.row(i))[0];
                    }
                    trees.push(t);
                }
                Boosted {
                    init: alloc::vec![init],
                    trees,
                    learning_rate: lr,
                    classification: false,
                }
            }
            Response::Classes {
                labels,
                num_classes,
            } => {
                let c = *num_classes;
                let mut counts = alloc::vec![0.0; c];
                for &l in labels {
                    counts[l] += 1.0;
                }
                // log prior, with a floor for classes absent from training
                let init: Vec<f64> = counts
                    .iter()
                    .map(|&k| math::ln((k / n as f64).max(1e-12)))
                    .collect();
                let mut f: Vec<Vec<f64>> = alloc::vec![init.clone(); n];
                let mut trees = Vec::with_capacity(params.n_rounds * c);
                let mut grad = alloc::vec![0.0; n];
                let factor = (c as f64 - 1.0) / c as f64;
                for _ in 0..params.n_rounds {
                    let probs: Vec<Vec<f64>> = f.iter().map(|fi| softmax(fi)).collect();
                    for k in 0..c {
                        for i in 0..n {
                            grad[i] = f64::from(u8::from(labels[i] == k)) - probs[i][k];
                        }
                        let (mut t, members) =
                            tree::build(x, Targets::Values(&grad), &samples, &tp, &mut rng);
                        for (leaf, rows) in members.iter().enumerate() {
                            let num: f64 = rows.iter().map(|&i| grad[i]).sum();
                            let den: f64 = rows
                                .iter()
                                .map(|&i| math::abs(grad[i]) * (1.0 - math::abs(grad[i])))
                                .sum();
                            let val = if den < 1e-150 { 0.0 } else { factor * num / den };
                            t.set_leaf_value(leaf, &[val]);
                        }
                        for (i, fi) in f.iter_mut().enumerate() {
                            fi[k] += lr * t.predict_row(x.row(i))[0];
                        }
                        trees.push(t);
                    }
                }
                Boosted {
                    init,
                    trees,
                    learning_rate: lr,
                    classification: true,
                }
            }
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> Vec<f64> {
        let w = self.init.len();
        let mut f = self.init.clone();
        for (j, t) in self.trees.iter().enumerate() {
            f[j % w] += self.learning_rate * t.predict_row(x)[0];
        }
        if self.classification {
            softmax(&f)
        } else {
            f
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_target_predicts_constant() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let b = Boosted::fit(&x, &Response::Continuous(alloc::vec![4.0; 3]), &BoostingParams::default());
        assert_eq!(b.predict_row(&[7.0]), alloc::vec![4.0]);
    }

    #[test]
    fn fits_step_function() {
        let rows: Vec<[f64; 1]> = (0..40).map(|i| [i as f64]).collect();
        let y: Vec<f64> = (0..40).map(|i| if i < 20 { 0.0 } else { 10.0 }).collect();
        let b = Boosted::fit(&Matrix::from_rows(&rows).unwrap(), &Response::Continuous(y), &BoostingParams::default());
        assert!(b.predict_row(&[5.0])[0].abs() < 0.01);
        assert!((b.predict_row(&[35.0])[0] - 10.0).abs() < 0.01);
    }

    #[test]
    fn classifier_learns_three_classes() {
        let rows: Vec<[f64; 1]> = (0..60).map(|i| [i as f64]).collect();
        let labels: Vec<usize> = (0..60).map(|i| i / 20).collect();
        let y = Response::Classes {
            labels: labels.clone(),
            num_classes: 3,
        };
        let b = Boosted::fit(&Matrix::from_rows(&rows).unwrap(), &y, &BoostingParams::default());
        for i in 0..60 {
            let p = b.predict_row(&[i as f64]);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p[labels[i]] > 0.9);
        }
    }
}
