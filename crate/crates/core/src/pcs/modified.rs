//! Split-calibrated PCS: bootstrap the training part only and calibrate a
//! midpoint-anchored scale factor on a held-out calibration part, which
//! gives finite-sample marginal coverage under exchangeability.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::calibrate::{check_alpha, Anchor, GammaCalibration};
use super::ensemble::{fit_bootstrap_ensemble, BootstrapEnsemble};
use super::interval::{BagSummary, Interval};
use super::screening::{screen_models, ScreeningReport};
use crate::data::{split_data, DataSplit, Dataset, Matrix, Task};
use crate::error::{Error, Result};
use crate::learners::{AlgorithmSpec, LossKind};
use crate::quantile::{conformal_rank, order_statistic};
use crate::seed::SeedSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModifiedPcsConfig {
    pub alpha: f64,
    pub n_bootstraps: usize,
    pub top_k: usize,
    /// Train / validation / calibration fractions of the fitting rows.
    pub fractions: [f64; 3],
}

impl Default for ModifiedPcsConfig {
    fn default() -> Self {
        ModifiedPcsConfig {
            alpha: 0.1,
            n_bootstraps: 100,
            top_k: 1,
            fractions: [0.5, 0.25, 0.25],
        }
    }
}

impl ModifiedPcsConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.n_bootstraps < 1 || self.top_k < 1 {
            return Err(Error::config("n_bootstraps and top_k must be at least 1"));
        }
        if self.fractions.iter().any(|f| !(*f > 0.0)) || (self.fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("split fractions must be positive and sum to 1"));
        }
        Ok(())
    }
}

/// Midpoint-anchored scores `|y - c| / (R/2)` and the conformal-rank factor.
pub fn calibrate_midpoint(summaries: &[BagSummary], responses: &[f64], alpha: f64) -> Result<GammaCalibration> {
    check_alpha(alpha)?;
    if summaries.len() != responses.len() {
        return Err(Error::LengthMismatch {
            left: summaries.len(),
            right: responses.len(),
        });
    }
    let scores: Vec<f64> = summaries
        .iter()
        .zip(responses)
        .map(|(s, &y)| s.symmetric_score(y))
        .collect();
    let m = scores.len();
    let rank = conformal_rank(alpha, m);
    if rank > m || m == 0 {
        return Err(Error::CalibrationSetTooSmall { rank, size: m, alpha });
    }
    let mut buf = scores.clone();
    let gamma_hat = order_statistic(&mut buf, rank);
    if gamma_hat.is_infinite() {
        return Err(Error::InfiniteCalibration {
            degenerate: scores.iter().filter(|s| s.is_infinite()).count(),
            used: m,
        });
    }
    Ok(GammaCalibration {
        gamma_hat,
        alpha,
        anchor: Anchor::Midpoint,
        per_sample_scores: scores,
        excluded: 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModifiedPcs {
    pub config: ModifiedPcsConfig,
    pub split: DataSplit,
    pub screening: ScreeningReport,
    pub ensemble: BootstrapEnsemble,
    pub calibration: GammaCalibration,
}

impl ModifiedPcs {
    pub fn fit(
        specs: &[AlgorithmSpec],
        dataset: &Dataset,
        rows: &[usize],
        config: &ModifiedPcsConfig,
        seed: SeedSpec,
    ) -> Result<Self> {
        config.validate()?;
        if dataset.task() != Task::Regression {
            return Err(Error::TaskMismatch("PCS intervals need a continuous response".into()));
        }
        let local = split_data(rows.len(), &config.fractions, seed.derive("modified-split", 0))?;
        let map = |v: &[usize]| -> Vec<usize> { v.iter().map(|&i| rows[i]).collect() };
        // split_data maps three parts to train / val / test
        let split = DataSplit {
            train: map(&local.train),
            val: map(&local.val),
            cal: map(&local.test),
            test: Vec::new(),
        };
        if split.val.is_empty() || split.cal.is_empty() {
            return Err(Error::config("modified PCS needs nonempty validation and calibration parts"));
        }
        let k = config.top_k.min(specs.len());
        let screening = screen_models(specs, &split, dataset, LossKind::Mse, k, seed.derive("screen", 0))?;
        let ensemble = fit_bootstrap_ensemble(
            &screening.selected_specs(),
            dataset,
            &split.train,
            config.n_bootstraps,
            seed.derive("ensemble", 0),
        )?;
        let summaries = full_summaries(&ensemble, &dataset.features.select_rows(&split.cal), config.alpha)?;
        let y = dataset.response.continuous()?;
        let ys: Vec<f64> = split.cal.iter().map(|&r| y[r]).collect();
        let calibration = calibrate_midpoint(&summaries, &ys, config.alpha)?;
        Ok(ModifiedPcs {
            config: config.clone(),
            split,
            screening,
            ensemble,
            calibration,
        })
    }

    pub fn predict_interval(&self, x: &[f64]) -> Result<Interval> {
        let bag = self.ensemble.full_bag(x)?;
        Ok(bag.summary(self.config.alpha).symmetric(self.calibration.gamma_hat))
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<Interval>> {
        Ok(full_summaries(&self.ensemble, x, self.config.alpha)?
            .iter()
            .map(|s| s.symmetric(self.calibration.gamma_hat))
            .collect())
    }

    /// The calibration score of `(x, y)`.
    pub fn score(&self, x: &[f64], y: f64) -> Result<f64> {
        Ok(self.ensemble.full_bag(x)?.summary(self.config.alpha).symmetric_score(y))
    }
}

/// Full-bag summaries at every row of `x`.
pub(crate) fn full_summaries(ensemble: &BootstrapEnsemble, x: &Matrix, alpha: f64) -> Result<Vec<BagSummary>> {
    let table = ensemble.prediction_table(x)?;
    let members: Vec<usize> = (0..ensemble.n_specs()).collect();
    let mut buf = Vec::new();
    Ok((0..x.rows())
        .map(|i| {
            table.bag_into(i, &members, None, &mut buf);
            buf.sort_unstable_by(f64::total_cmp);
            BagSummary::from_sorted(&buf, alpha)
        })
        .collect())
}
