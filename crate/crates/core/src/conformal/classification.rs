//! Split-conformal classification baselines: Top-K, APS, RAPS and majority
//! vote over APS sets.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{DataSplit, Dataset, Matrix, Task};
use crate::error::{Error, Result};
use crate::learners::{self, AlgorithmSpec, FittedModel, ProbabilityVector};
use crate::pcs::{aps_score, aps_set, check_alpha, penalized_score, penalized_set, PredictionSet};
use crate::quantile::quantile;
use crate::seed::SeedSpec;

/// Candidate rank penalties for RAPS.
pub const RAPS_LAMBDA_GRID: [f64; 7] = [0.001, 0.01, 0.05, 0.1, 0.2, 0.5, 1.0];

struct Prepared {
    model: FittedModel,
    labels: Vec<usize>,
}

/// Fits on `train` and returns the model with the full label vector.
fn fit_on(spec: &AlgorithmSpec, dataset: &Dataset, train: &[usize], seed: SeedSpec) -> Result<Prepared> {
    if dataset.task() != Task::Classification {
        return Err(Error::TaskMismatch("prediction sets need class labels".into()));
    }
    let model = learners::fit(
        spec,
        &dataset.features.select_rows(train),
        &dataset.response.select(train),
        seed,
    )?;
    let (labels, _) = dataset.response.classes()?;
    Ok(Prepared {
        model,
        labels: labels.to_vec(),
    })
}

fn probas(model: &FittedModel, dataset: &Dataset, rows: &[usize]) -> Result<Vec<ProbabilityVector>> {
    if rows.is_empty() {
        return Err(Error::config("calibration rows are empty"));
    }
    model.predict_proba(&dataset.features.select_rows(rows))
}

/// 1-based rank of class `y` in the probability ranking.
pub fn class_rank(p: &ProbabilityVector, y: usize) -> usize {
    p.ranking().iter().position(|&c| c == y).expect("class within range") + 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopK {
    pub model: FittedModel,
    /// Set size.
    pub q: usize,
    pub alpha: f64,
}

fn rank_quantile(ps: &[ProbabilityVector], labels: &[usize], alpha: f64) -> Result<usize> {
    let ranks: Vec<f64> = ps.iter().zip(labels).map(|(p, &y)| class_rank(p, y) as f64).collect();
    Ok(quantile(&ranks, 1.0 - alpha)? as usize)
}

impl TopK {
    pub fn fit(spec: &AlgorithmSpec, dataset: &Dataset, split: &DataSplit, alpha: f64, seed: SeedSpec) -> Result<Self> {
        check_alpha(alpha)?;
        let p = fit_on(spec, dataset, &split.train, seed)?;
        let ps = probas(&p.model, dataset, &split.val)?;
        let ys: Vec<usize> = split.val.iter().map(|&r| p.labels[r]).collect();
        let q = rank_quantile(&ps, &ys, alpha)?;
        Ok(TopK { model: p.model, q, alpha })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<PredictionSet>> {
        Ok(self
            .model
            .predict_proba(x)?
            .iter()
            .map(|p| PredictionSet {
                classes: p.ranking()[..self.q].to_vec(),
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aps {
    pub model: FittedModel,
    pub q: f64,
    pub alpha: f64,
}

impl Aps {
    pub fn fit(spec: &AlgorithmSpec, dataset: &Dataset, split: &DataSplit, alpha: f64, seed: SeedSpec) -> Result<Self> {
        check_alpha(alpha)?;
        let p = fit_on(spec, dataset, &split.train, seed)?;
        let ps = probas(&p.model, dataset, &split.val)?;
        let scores = ps
            .iter()
            .zip(&split.val)
            .map(|(pv, &r)| aps_score(pv, p.labels[r]))
            .collect::<Result<Vec<f64>>>()?;
        let q = quantile(&scores, 1.0 - alpha)?;
        Ok(Aps { model: p.model, q, alpha })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<PredictionSet>> {
        Ok(self.model.predict_proba(x)?.iter().map(|p| aps_set(p, self.q)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Raps {
    pub model: FittedModel,
    pub q: f64,
    pub lambda: f64,
    pub t_reg: usize,
    pub alpha: f64,
}

fn raps_threshold(ps: &[ProbabilityVector], ys: &[usize], lambda: f64, t_reg: usize, alpha: f64) -> Result<f64> {
    let scores = ps
        .iter()
        .zip(ys)
        .map(|(p, &y)| penalized_score(p, y, Some((lambda, t_reg))))
        .collect::<Result<Vec<f64>>>()?;
    quantile(&scores, 1.0 - alpha)
}

impl Raps {
    /// Trains on `split.train`, tunes `t_reg` and `λ` on `split.val` and
    /// calibrates on `split.cal`.
    pub fn fit(spec: &AlgorithmSpec, dataset: &Dataset, split: &DataSplit, alpha: f64, seed: SeedSpec) -> Result<Self> {
        check_alpha(alpha)?;
        let p = fit_on(spec, dataset, &split.train, seed)?;
        let tune = probas(&p.model, dataset, &split.val)?;
        let y_tune: Vec<usize> = split.val.iter().map(|&r| p.labels[r]).collect();
        let t_reg = rank_quantile(&tune, &y_tune, alpha)?;
        let mut best: Option<(f64, f64)> = None;
        for &lambda in RAPS_LAMBDA_GRID.iter() {
            let Ok(q) = raps_threshold(&tune, &y_tune, lambda, t_reg, alpha) else {
                continue;
            };
            let size = tune
                .iter()
                .map(|pv| penalized_set(pv, q, Some((lambda, t_reg))).len() as f64)
                .sum::<f64>()
                / tune.len() as f64;
            if best.is_none_or(|(_, s)| size < s) {
                best = Some((lambda, size));
            }
        }
        let Some((lambda, _)) = best else {
            return Err(Error::NoCandidate("no RAPS penalty could be calibrated".into()));
        };
        Self::calibrate(p.model, dataset, &split.cal, &p.labels, lambda, t_reg, alpha)
    }

    /// Calibration with fixed `λ` and `t_reg` on the given rows.
    pub fn with_params(
        spec: &AlgorithmSpec,
        dataset: &Dataset,
        split: &DataSplit,
        lambda: f64,
        t_reg: usize,
        alpha: f64,
        seed: SeedSpec,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        let p = fit_on(spec, dataset, &split.train, seed)?;
        Self::calibrate(p.model, dataset, &split.val, &p.labels, lambda, t_reg, alpha)
    }

    fn calibrate(
        model: FittedModel,
        dataset: &Dataset,
        rows: &[usize],
        labels: &[usize],
        lambda: f64,
        t_reg: usize,
        alpha: f64,
    ) -> Result<Self> {
        let ps = probas(&model, dataset, rows)?;
        let ys: Vec<usize> = rows.iter().map(|&r| labels[r]).collect();
        let q = raps_threshold(&ps, &ys, lambda, t_reg, alpha)?;
        Ok(Raps {
            model,
            q,
            lambda,
            t_reg,
            alpha,
        })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<PredictionSet>> {
        Ok(self
            .model
            .predict_proba(x)?
            .iter()
            .map(|p| penalized_set(p, self.q, Some((self.lambda, self.t_reg))))
            .collect())
    }
}

/// Classes contained in strictly more than half of the sets, ascending.
pub fn majority_set(sets: &[PredictionSet], num_classes: usize) -> PredictionSet {
    let mut counts = alloc::vec![0usize; num_classes];
    for s in sets {
        for &c in &s.classes {
            counts[c] += 1;
        }
    }
    PredictionSet {
        classes: (0..num_classes).filter(|&c| 2 * counts[c] > sets.len()).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityVoteClassification {
    /// APS models calibrated at `α/2`.
    pub members: Vec<Aps>,
    pub num_classes: usize,
    pub alpha: f64,
}

impl MajorityVoteClassification {
    pub fn fit(specs: &[AlgorithmSpec], dataset: &Dataset, split: &DataSplit, alpha: f64, seed: SeedSpec) -> Result<Self> {
        check_alpha(alpha)?;
        if specs.is_empty() {
            return Err(Error::config("majority vote needs at least one model"));
        }
        let members = specs
            .iter()
            .enumerate()
            .map(|(j, s)| Aps::fit(s, dataset, split, alpha / 2.0, seed.derive("member", j as u64)))
            .collect::<Result<Vec<_>>>()?;
        let num_classes = dataset.num_classes().unwrap_or(0);
        Ok(MajorityVoteClassification {
            members,
            num_classes,
            alpha,
        })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<PredictionSet>> {
        let per: Vec<Vec<PredictionSet>> = self.members.iter().map(|m| m.predict(x)).collect::<Result<_>>()?;
        Ok((0..x.rows())
            .map(|i| {
                let sets: Vec<PredictionSet> = per.iter().map(|p| p[i].clone()).collect();
                majority_set(&sets, self.num_classes)
            })
            .collect())
    }
}
