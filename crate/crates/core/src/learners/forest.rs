//! Random forest: bootstrapped CART trees with per-node feature sampling.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{self, MaxFeatures, Targets, Tree, TreeParams};
use crate::data::{Matrix, Response};
use crate::parallel;
use crate::seed::SeedSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            tree: TreeParams {
                max_features: MaxFeatures::Auto,
                ..TreeParams::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    trees: Vec<Tree>,
    width: usize,
}

impl Forest {
    pub fn fit(x: &Matrix, y: &Response, params: &ForestParams, seed: SeedSpec) -> Self {
        let n = x.rows();
        let targets = Targets::from_response(y);
        let trees = parallel::map_indices(params.n_trees, |t| {
            let mut rng = seed.derive("forest-tree", t as u64).rng();
            let samples: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            tree::build(x, targets, &samples, &params.tree, &mut rng).0
        });
        let width = match y {
            Response::Continuous(_) => 1,
            Response::Classes { num_classes, .. } => *num_classes,
        };
        Forest { trees, width }
    }

    pub fn predict_row(&self, x: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.width];
        for t in &self.trees {
            for (o, v) in out.iter_mut().zip(t.predict_row(x)) {
                *o += v;
            }
        }
        let k = self.trees.len() as f64;
        out.iter_mut().for_each(|o| *o /= k);
        out
    }

    /// Mean of the per-tree normalised importances.
    pub fn importances(&self) -> Vec<f64> {
        let d = self.trees.first().map_or(0, |t| t.raw_importances().len());
        let mut acc = alloc::vec![0.0; d];
        for t in &self.trees {
            for (a, v) in acc.iter_mut().zip(t.normalized_importances()) {
                *a += v;
            }
        }
        tree::normalize(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn threshold_data(n: usize, seed: u64) -> (Matrix, Response) {
        let mut rng = SeedSpec::new(seed).rng();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let r: [f64; 3] = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            labels.push(usize::from(r[0] > 0.0));
            rows.push(r);
        }
        (
            Matrix::from_rows(&rows).unwrap(),
            Response::Classes {
                labels,
                num_classes: 2,
            },
        )
    }

    #[test]
    fn separates_threshold_classes() {
        let (x, y) = threshold_data(500, 7);
        let p = ForestParams {
            n_trees: 50,
            ..ForestParams::default()
        };
        let f = Forest::fit(&x, &y, &p, SeedSpec::new(1));
        let (labels, _) = y.classes().unwrap();
        let correct = (0..x.rows())
            .filter(|&i| {
                let pr = f.predict_row(x.row(i));
                usize::from(pr[1] > pr[0]) == labels[i]
            })
            .count();
        assert!(correct as f64 / 500.0 >= 0.95);
        let imp = f.importances();
        assert!(imp[0] > imp[1] && imp[0] > imp[2]);
    }

    #[test]
    fn same_seed_same_forest() {
        let (x, y) = threshold_data(100, 2);
        let p = ForestParams {
            n_trees: 10,
            ..ForestParams::default()
        };
        assert_eq!(Forest::fit(&x, &y, &p, SeedSpec::new(4)), Forest::fit(&x, &y, &p, SeedSpec::new(4)));
    }

    #[test]
    fn averaging_reduces_variance() {
        // prediction spread across refits on the same data, tree vs forest
        let mut rng = SeedSpec::new(9).rng();
        let rows: Vec<[f64; 1]> = (0..200).map(|_| [rng.random_range(0.0..1.0)]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] + rng.random_range(-1.0..1.0)).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y = Response::Continuous(y);
        let spread = |n_trees: usize| {
            let p = ForestParams {
                n_trees,
                ..ForestParams::default()
            };
            let preds: Vec<f64> = (0..20)
                .map(|s| Forest::fit(&x, &y, &p, SeedSpec::new(s)).predict_row(&[0.5])[0])
                .collect();
            let m = preds.iter().sum::<f64>() / 20.0;
            preds.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 19.0
        };
        assert!(spread(30) < spread(1));
    }
}
