//! k-nearest neighbours on standardised features.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::linalg::Standardizer;
use crate::data::{Matrix, Response};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    k: usize,
    std: Standardizer,
    points: Matrix,
    /// One value per row (regression) or one label per row.
    targets: Vec<f64>,
    num_classes: Option<usize>,
}

impl KnnModel {
    pub fn fit(x: &Matrix, y: &Response, k: usize) -> Self {
        let std = Standardizer::fit(x);
        let points = std.transform(x);
        let (targets, num_classes) = match y {
            Response::Continuous(v) => (v.clone(), None),
            Response::Classes {
                labels,
                num_classes,
            } => (labels.iter().map(|&c| c as f64).collect(), Some(*num_classes)),
        };
        KnnModel {
            k: k.min(x.rows()),
            std,
            points,
            targets,
            num_classes,
        }
    }

    /// Indices of the `k` nearest training rows; distance ties go to the
    /// lower training index.
    fn neighbours(&self, row: &[f64]) -> Vec<usize> {
        let mut q = alloc::vec![0.0; row.len()];
        self.std.transform_row(row, &mut q);
        let mut dist: Vec<(f64, usize)> = (0..self.points.rows())
            .map(|i| {
                let d: f64 = self
                    .points
                    .row(i)
                    .iter()
                    .zip(&q)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d, i)
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, cmp);
            dist.truncate(self.k);
        }
        dist.sort_by(cmp);
        dist.into_iter().map(|(_, i)| i).collect()
    }

    pub fn predict_row(&self, row: &[f64]) -> Vec<f64> {
        let nb = self.neighbours(row);
        match self.num_classes {
            None => {
                let s: f64 = nb.iter().map(|&i| self.targets[i]).sum();
                alloc::vec![s / nb.len() as f64]
            }
            Some(c) => {
                let mut p = alloc::vec![0.0; c];
                for &i in &nb {
                    p[self.targets[i] as usize] += 1.0 / nb.len() as f64;
                }
                p
            }
        }
    }
}
