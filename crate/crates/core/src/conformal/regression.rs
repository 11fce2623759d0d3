//! Split-conformal regression baselines.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::union::{majority_union, IntervalUnion};
use crate::data::{DataSplit, Dataset, Matrix, Task};
use crate::error::{Error, Result};
use crate::learners::{self, AlgorithmSpec, FittedModel, LossKind};
use crate::pcs::{
    check_alpha, empirical_threshold, fit_bootstrap_ensemble, full_summaries, screen_models,
    BootstrapEnsemble, GammaCalibration, Interval, PcsConfig, ScreeningReport,
};
use crate::pcs::calibrate_gamma_summaries;
use crate::seed::SeedSpec;

/// Lower bound applied to the scale model's predictions.
pub const SIGMA_FLOOR: f64 = 1e-8;

fn check_split(dataset: &Dataset, split: &DataSplit) -> Result<()> {
    split.validate(dataset.n())?;
    if split.val.is_empty() {
        return Err(Error::config("conformal calibration needs a nonempty validation set"));
    }
    if dataset.task() != Task::Regression {
        return Err(Error::TaskMismatch("conformal intervals need a continuous response".into()));
    }
    Ok(())
}

fn predict_rows(model: &FittedModel, dataset: &Dataset, rows: &[usize]) -> Result<Vec<f64>> {
    model.predict(&dataset.features.select_rows(rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConformal {
    pub model: FittedModel,
    pub q: f64,
    pub alpha: f64,
}

impl SplitConformal {
    /// Trains on `split.train`, calibrates absolute residuals on `split.val`.
    pub fn fit(spec: &AlgorithmSpec, dataset: &Dataset, split: &DataSplit, alpha: f64, seed: SeedSpec) -> Result<Self> {
        check_alpha(alpha)?;
        check_split(dataset, split)?;
        let model = learners::fit(
            spec,
            &dataset.features.select_rows(&split.train),
            &dataset.response.select(&split.train),
            seed,
        )?;
        let y = dataset.response.continuous()?;
        let scores: Vec<f64> = predict_rows(&model, dataset, &split.val)?
            .iter()
            .zip(&split.val)
            .map(|(p, &r)| (y[r] - p).abs())
            .collect();
        let q = empirical_threshold(&scores, alpha)?;
        Ok(SplitConformal { model, q, alpha })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<Interval>> {
        Ok(self
            .model
            .predict(x)?
            .into_iter()
            .map(|p| Interval {
                lower: p - self.q,
                upper: p + self.q,
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentizedConformal {
    pub model: FittedModel,
    /// Fitted to the absolute training residuals of `model`.
    pub sigma: FittedModel,
    pub q: f64,
    pub alpha: f64,
}

impl StudentizedConformal {
    pub fn fit(
        spec: &AlgorithmSpec,
        sigma_spec: &AlgorithmSpec,
        dataset: &Dataset,
        split: &DataSplit,
        alpha: f64,
        seed: SeedSpec,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        check_split(dataset, split)?;
        let x_tr = dataset.features.select_rows(&split.train);
        let y = dataset.response.continuous()?;
        let model = learners::fit(spec, &x_tr, &dataset.response.select(&split.train), seed.derive("mean", 0))?;
        let resid: Vec<f64> = model
            .predict(&x_tr)?
            .iter()
            .zip(&split.train)
            .map(|(p, &r)| (y[r] - p).abs())
            .collect();
        let sigma = learners::fit(sigma_spec, &x_tr, &crate::data::Response::Continuous(resid), seed.derive("sigma", 0))?;
        let x_val = dataset.features.select_rows(&split.val);
        let mu = model.predict(&x_val)?;
        let sd = sigma.predict(&x_val)?;
        let scores: Vec<f64> = split
            .val
            .iter()
            .enumerate()
            .map(|(k, &r)| (y[r] - mu[k]).abs() / sd[k].max(SIGMA_FLOOR))
            .collect();
        let q = empirical_threshold(&scores, alpha)?;
        Ok(StudentizedConformal { model, sigma, q, alpha })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<Interval>> {
        let mu = self.model.predict(x)?;
        let sd = self.sigma.predict(x)?;
        Ok(mu
            .iter()
            .zip(&sd)
            .map(|(m, s)| {
                let h = self.q * s.max(SIGMA_FLOOR);
                Interval {
                    lower: m - h,
                    upper: m + h,
                }
            })
            .collect())
    }
}

/// Split-conformal models at level `1 - α/2`, merged by strict majority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityVoteRegression {
    pub members: Vec<SplitConformal>,
    pub alpha: f64,
}

impl MajorityVoteRegression {
    pub fn fit(specs: &[AlgorithmSpec], dataset: &Dataset, split: &DataSplit, alpha: f64, seed: SeedSpec) -> Result<Self> {
        check_alpha(alpha)?;
        if specs.is_empty() {
            return Err(Error::config("majority vote needs at least one model"));
        }
        let members = specs
            .iter()
            .enumerate()
            .map(|(j, s)| SplitConformal::fit(s, dataset, split, alpha / 2.0, seed.derive("member", j as u64)))
            .collect::<Result<Vec<_>>>()?;
        Ok(MajorityVoteRegression { members, alpha })
    }

    pub fn from_members(members: Vec<SplitConformal>, alpha: f64) -> Self {
        MajorityVoteRegression { members, alpha }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<IntervalUnion>> {
        let per: Vec<Vec<Interval>> = self.members.iter().map(|m| m.predict(x)).collect::<Result<_>>()?;
        Ok((0..x.rows())
            .map(|i| {
                let ivs: Vec<Interval> = per.iter().map(|p| p[i]).collect();
                majority_union(&ivs)
            })
            .collect())
    }
}

/// Bootstrap PCS with train-only resamples and calibration on the held-out
/// validation rows using full bags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcsCh13 {
    pub alpha: f64,
    pub screening: ScreeningReport,
    pub ensemble: BootstrapEnsemble,
    pub calibration: GammaCalibration,
}

impl PcsCh13 {
    pub fn fit(
        specs: &[AlgorithmSpec],
        dataset: &Dataset,
        split: &DataSplit,
        config: &PcsConfig,
        seed: SeedSpec,
    ) -> Result<Self> {
        config.validate()?;
        check_split(dataset, split)?;
        let k = config.top_k.min(specs.len());
        let screening = screen_models(specs, split, dataset, LossKind::Mse, k, seed.derive("screen", 0))?;
        let ensemble = fit_bootstrap_ensemble(
            &screening.selected_specs(),
            dataset,
            &split.train,
            config.n_bootstraps,
            seed.derive("ensemble", 0),
        )?;
        let summaries = full_summaries(&ensemble, &dataset.features.select_rows(&split.val), config.alpha)?;
        let y = dataset.response.continuous()?;
        let ys: Vec<f64> = split.val.iter().map(|&r| y[r]).collect();
        let calibration = calibrate_gamma_summaries(&summaries, &ys, config.alpha)?;
        Ok(PcsCh13 {
            alpha: config.alpha,
            screening,
            ensemble,
            calibration,
        })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<Interval>> {
        Ok(full_summaries(&self.ensemble, x, self.alpha)?
            .iter()
            .map(|s| s.scaled(self.calibration.gamma_hat))
            .collect())
    }
}
