//! Bootstrap ensembles: `k` specs fitted on each of `B` resamples.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::interval::{BagSource, PredictionBag};
use crate::bootstrap::BootstrapPlan;
use crate::data::{Dataset, Matrix, Task};
use crate::error::{Error, Result};
use crate::hash::fingerprint;
use crate::learners::{self, AlgorithmSpec, FittedModel, ProbabilityVector};
use crate::parallel;
use crate::seed::SeedSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapEnsemble {
    pub specs: Vec<AlgorithmSpec>,
    /// Dataset rows the plan resamples; plan index `i` is row `rows[i]`.
    pub rows: Vec<usize>,
    pub plan: BootstrapPlan,
    pub task: Task,
    pub seed: SeedSpec,
    /// `models[j][b]`: spec `j` fitted on resample `b`.
    models: Vec<Vec<FittedModel>>,
}

fn model_seed(seed: SeedSpec, j: usize, b: usize) -> SeedSpec {
    seed.derive("ensemble-spec", j as u64).derive("bootstrap", b as u64)
}

/// Fits every spec on every resample of `rows`. Seeds depend only on
/// `(seed, j, b)`, so results do not depend on scheduling.
pub fn fit_bootstrap_ensemble(
    specs: &[AlgorithmSpec],
    dataset: &Dataset,
    rows: &[usize],
    n_bootstraps: usize,
    seed: SeedSpec,
) -> Result<BootstrapEnsemble> {
    if specs.is_empty() {
        return Err(Error::config("ensemble needs at least one spec"));
    }
    if rows.len() < 2 {
        return Err(Error::config("ensemble needs at least two rows"));
    }
    let plan = BootstrapPlan::generate(rows.len(), n_bootstraps, seed.derive("bootstrap-plan", 0))?;
    let k = specs.len();
    let fits: Vec<Result<FittedModel>> = parallel::map_indices(k * n_bootstraps, |t| {
        let (j, b) = (t / n_bootstraps, t % n_bootstraps);
        let train: Vec<usize> = plan.resample(b).iter().map(|&i| rows[i]).collect();
        let x = dataset.features.select_rows(&train);
        let y = dataset.response.select(&train);
        let s = model_seed(seed, j, b);
        let m = learners::fit(&specs[j], &x, &y, s)
            .or_else(|_| learners::fit(&specs[j], &x, &y, s.derive("retry", 0)));
        m.map(|m| m.with_fingerprint(fingerprint(&train, s.master)))
    });
    let mut models: Vec<Vec<FittedModel>> = Vec::with_capacity(k);
    let mut it = fits.into_iter();
    for j in 0..k {
        let mut row = Vec::with_capacity(n_bootstraps);
        for b in 0..n_bootstraps {
            row.push(it.next().expect("k*B fits").map_err(|e| Error::Fit {
                learner: specs[j].name(),
                reason: format!("bootstrap {b}: {e}"),
            })?);
        }
        models.push(row);
    }
    Ok(BootstrapEnsemble {
        specs: specs.to_vec(),
        rows: rows.to_vec(),
        plan,
        task: dataset.task(),
        seed,
        models,
    })
}

/// Predictions of every model at a set of points, `[j][b][point]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    k: usize,
    b: usize,
    n: usize,
    /// Regression: one value per entry. Classification: `width` per entry.
    width: usize,
    values: Vec<f64>,
}

impl PredictionTable {
    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn n_specs(&self) -> usize {
        self.k
    }

    pub fn n_bootstraps(&self) -> usize {
        self.b
    }

    #[inline]
    pub fn get(&self, j: usize, b: usize, i: usize) -> &[f64] {
        let at = ((j * self.b + b) * self.n + i) * self.width;
        &self.values[at..at + self.width]
    }

    /// Regression bag at point `i` over specs `members` and the given
    /// bootstraps (all when `None`).
    pub fn bag_into(&self, i: usize, members: &[usize], boots: Option<&[usize]>, out: &mut Vec<f64>) {
        out.clear();
        for &j in members {
            match boots {
                Some(bs) => out.extend(bs.iter().map(|&b| self.get(j, b, i)[0])),
                None => out.extend((0..self.b).map(|b| self.get(j, b, i)[0])),
            }
        }
    }

    /// Mean probability vector at point `i`; `None` when no bootstrap is
    /// selected.
    pub fn mean_proba(&self, i: usize, members: &[usize], boots: Option<&[usize]>) -> Option<ProbabilityVector> {
        let mut acc = alloc::vec![0.0; self.width];
        let mut count = 0usize;
        let all: Vec<usize>;
        let bs = match boots {
            Some(bs) => bs,
            None => {
                all = (0..self.b).collect();
                &all
            }
        };
        for &j in members {
            for &b in bs {
                for (a, v) in acc.iter_mut().zip(self.get(j, b, i)) {
                    *a += v;
                }
                count += 1;
            }
        }
        if count == 0 {
            return None;
        }
        acc.iter_mut().for_each(|a| *a /= count as f64);
        Some(ProbabilityVector::normalized(acc))
    }
}

impl BootstrapEnsemble {
    pub fn n_specs(&self) -> usize {
        self.models.len()
    }

    pub fn n_bootstraps(&self) -> usize {
        self.plan.n_bootstraps()
    }

    pub fn model(&self, j: usize, b: usize) -> &FittedModel {
        &self.models[j][b]
    }

    fn n_features(&self) -> usize {
        self.models[0][0].n_features
    }

    fn check_dims(&self, cols: usize) -> Result<()> {
        if cols != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: cols,
            });
        }
        Ok(())
    }

    /// Every model's output at every row of `x`.
    pub fn prediction_table(&self, x: &Matrix) -> Result<PredictionTable> {
        self.check_dims(x.cols())?;
        let (k, b, n) = (self.n_specs(), self.n_bootstraps(), x.rows());
        let width = match self.task {
            Task::Regression => 1,
            Task::Classification => self.models[0][0].num_classes.unwrap_or(1),
        };
        let classification = self.task == Task::Classification;
        let chunks: Vec<Vec<f64>> = parallel::map_indices(k * b, |t| {
            let m = &self.models[t / b][t % b];
            let mut out = Vec::with_capacity(n * width);
            for i in 0..n {
                let raw = m.predict_row(x.row(i));
                if classification {
                    out.extend_from_slice(ProbabilityVector::normalized(raw).probs());
                } else {
                    out.push(raw[0]);
                }
            }
            out
        });
        Ok(PredictionTable {
            k,
            b,
            n,
            width,
            values: chunks.concat(),
        })
    }

    /// Predictions at the ensemble's own rows, for out-of-bag use.
    pub fn training_table(&self, dataset: &Dataset) -> Result<PredictionTable> {
        self.prediction_table(&dataset.features.select_rows(&self.rows))
    }

    /// Bag of the `k·|T_i|` models whose resample excludes plan index `i`.
    pub fn oob_bag(&self, i: usize, x_i: &[f64]) -> Result<PredictionBag> {
        self.check_dims(x_i.len())?;
        let oob = self.plan.oob(i);
        if oob.is_empty() {
            return Err(Error::EmptyOob { index: i });
        }
        let mut v = Vec::with_capacity(self.n_specs() * oob.len());
        for row in &self.models {
            for &b in oob {
                v.push(row[b].predict_row(x_i)[0]);
            }
        }
        PredictionBag::new(v, BagSource::OutOfBag)
    }

    /// Bag of all `k·B` predictions at `x`.
    pub fn full_bag(&self, x: &[f64]) -> Result<PredictionBag> {
        self.check_dims(x.len())?;
        let mut v = Vec::with_capacity(self.n_specs() * self.n_bootstraps());
        for row in &self.models {
            for m in row {
                v.push(m.predict_row(x)[0]);
            }
        }
        PredictionBag::new(v, BagSource::Full)
    }

    /// Checks that no model contributing to `oob(i)` saw row `rows[i]`, using
    /// the stored training fingerprints to confirm which rows each model used.
    pub fn audit_oob(&self, i: usize) -> Result<()> {
        let target = self.rows[i];
        for (j, row) in self.models.iter().enumerate() {
            for &b in self.plan.oob(i) {
                let train: Vec<usize> = self.plan.resample(b).iter().map(|&r| self.rows[r]).collect();
                let expected = fingerprint(&train, model_seed(self.seed, j, b).master);
                let fp = row[b].train_fingerprint;
                let retry = fingerprint(&train, model_seed(self.seed, j, b).derive("retry", 0).master);
                if fp != expected && fp != retry {
                    return Err(Error::domain(format!("model ({j},{b}) fingerprint does not match its resample")));
                }
                if train.contains(&target) {
                    return Err(Error::domain(format!("model ({j},{b}) saw out-of-bag row {target}")));
                }
            }
        }
        Ok(())
    }

    /// Ensemble restricted to the given spec positions.
    pub fn restrict(&self, members: &[usize]) -> BootstrapEnsemble {
        BootstrapEnsemble {
            specs: members.iter().map(|&j| self.specs[j].clone()).collect(),
            rows: self.rows.clone(),
            plan: self.plan.clone(),
            task: self.task,
            seed: self.seed,
            models: members.iter().map(|&j| self.models[j].clone()).collect(),
        }
    }
}
