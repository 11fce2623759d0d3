//! The PCS regression pipeline: screen, bootstrap, calibrate on
//! out-of-bag bags, pick the best model subset, predict on full bags.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::calibrate::{
    calibrate_additive_summaries, calibrate_gamma_summaries, check_alpha, AdditiveCalibration,
    GammaCalibration,
};
use super::ensemble::{fit_bootstrap_ensemble, BootstrapEnsemble, PredictionTable};
use super::interval::{BagSummary, Interval, PredictionBag};
use super::screening::{screen_models, ScreeningReport};
use crate::data::{split_data, DataSplit, Dataset, Matrix, Task};
use crate::error::{Error, Result};
use crate::learners::{AlgorithmSpec, LossKind};
use crate::parallel;
use crate::seed::SeedSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    #[default]
    Multiplicative,
    Additive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PcsConfig {
    pub alpha: f64,
    pub n_bootstraps: usize,
    /// Models kept by screening.
    pub top_k: usize,
    /// Search all nonempty subsets of the screened models for the narrowest
    /// calibrated intervals; otherwise use all of them.
    pub subset_search: bool,
    pub calibration: CalibrationMode,
    /// Fraction of the fitting rows used to train during screening; the
    /// rest is the validation part.
    pub screen_train_fraction: f64,
}

impl Default for PcsConfig {
    fn default() -> Self {
        PcsConfig {
            alpha: 0.1,
            n_bootstraps: 100,
            top_k: 3,
            subset_search: true,
            calibration: CalibrationMode::Multiplicative,
            screen_train_fraction: 0.8,
        }
    }
}

impl PcsConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.n_bootstraps < 1 {
            return Err(Error::config("n_bootstraps must be at least 1"));
        }
        if self.top_k < 1 {
            return Err(Error::config("top_k must be at least 1"));
        }
        if !(self.screen_train_fraction > 0.0 && self.screen_train_fraction < 1.0) {
            return Err(Error::config("screen_train_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Train/validation split of `rows` used for screening, as dataset rows.
pub(crate) fn screening_split(rows: &[usize], train_fraction: f64, seed: SeedSpec) -> Result<DataSplit> {
    let s = split_data(rows.len(), &[train_fraction, 1.0 - train_fraction], seed.derive("screen-split", 0))?;
    Ok(DataSplit {
        train: s.train.iter().map(|&i| rows[i]).collect(),
        val: s.test.iter().map(|&i| rows[i]).collect(),
        cal: Vec::new(),
        test: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum RegressionCalibration {
    Multiplicative(GammaCalibration),
    Additive(AdditiveCalibration),
}

impl RegressionCalibration {
    pub fn apply(&self, s: &BagSummary) -> Interval {
        match self {
            RegressionCalibration::Multiplicative(g) => s.scaled(g.gamma_hat),
            RegressionCalibration::Additive(a) => s.widened(a.offset),
        }
    }

    pub fn excluded(&self) -> usize {
        match self {
            RegressionCalibration::Multiplicative(g) => g.excluded,
            RegressionCalibration::Additive(a) => a.excluded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetScore {
    /// Positions among the screened models, ascending.
    pub members: Vec<usize>,
    pub mean_width: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetChoice {
    pub members: Vec<usize>,
    pub mean_width: f64,
    pub candidates: Vec<SubsetScore>,
}

/// Out-of-bag calibration of the given members. Returns the calibration and
/// the mean calibrated out-of-bag width.
pub fn calibrate_members(
    ensemble: &BootstrapEnsemble,
    table: &PredictionTable,
    responses: &[f64],
    members: &[usize],
    alpha: f64,
    mode: CalibrationMode,
) -> Result<(RegressionCalibration, f64)> {
    let mut summaries = Vec::with_capacity(responses.len());
    let mut ys = Vec::with_capacity(responses.len());
    let mut excluded = 0usize;
    let mut buf = Vec::new();
    for (i, &y) in responses.iter().enumerate() {
        let oob = ensemble.plan.oob(i);
        if oob.is_empty() {
            excluded += 1;
            continue;
        }
        table.bag_into(i, members, Some(oob), &mut buf);
        buf.sort_unstable_by(f64::total_cmp);
        summaries.push(BagSummary::from_sorted(&buf, alpha));
        ys.push(y);
    }
    let cal = match mode {
        CalibrationMode::Multiplicative => {
            let mut g = calibrate_gamma_summaries(&summaries, &ys, alpha)?;
            g.excluded = excluded;
            RegressionCalibration::Multiplicative(g)
        }
        CalibrationMode::Additive => {
            let mut a = calibrate_additive_summaries(&summaries, &ys, alpha)?;
            a.excluded = excluded;
            RegressionCalibration::Additive(a)
        }
    };
    let width = summaries.iter().map(|s| cal.apply(s).width()).sum::<f64>() / summaries.len() as f64;
    Ok((cal, width))
}

/// Nonempty subsets of `0..m` in order of size, then lexicographically.
fn subsets(m: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (1u32..(1 << m))
        .map(|mask| (0..m).filter(|&j| mask & (1 << j) != 0).collect())
        .collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    all
}

/// Evaluates every nonempty subset of the ensemble's specs and returns the
/// one with the smallest mean calibrated out-of-bag width. Widths within
/// `1e-12` tie; ties go to fewer models, then to better-ranked models.
pub fn select_model_subset(
    ensemble: &BootstrapEnsemble,
    table: &PredictionTable,
    responses: &[f64],
    alpha: f64,
    mode: CalibrationMode,
) -> Result<SubsetChoice> {
    let cands = subsets(ensemble.n_specs());
    let scores: Vec<SubsetScore> = parallel::map_indices(cands.len(), |c| {
        match calibrate_members(ensemble, table, responses, &cands[c], alpha, mode) {
            Ok((_, w)) => SubsetScore {
                members: cands[c].clone(),
                mean_width: Some(w),
                error: None,
            },
            Err(e) => SubsetScore {
                members: cands[c].clone(),
                mean_width: None,
                error: Some(e.to_string()),
            },
        }
    });
    let mut best: Option<(usize, f64)> = None;
    // candidates are already ordered by the tie rule, so only a strictly
    // smaller width (beyond the tolerance) displaces the incumbent
    for (c, s) in scores.iter().enumerate() {
        if let Some(w) = s.mean_width {
            if best.is_none_or(|(_, bw)| w < bw - 1e-12) {
                best = Some((c, w));
            }
        }
    }
    let Some((c, w)) = best else {
        return Err(scores
            .iter()
            .find_map(|s| s.error.clone())
            .map_or_else(|| Error::NoCandidate("no subsets".into()), Error::NoCandidate));
    };
    Ok(SubsetChoice {
        members: cands[c].clone(),
        mean_width: w,
        candidates: scores,
    })
}

/// `scale_interval` of the full bag at `x` by the calibrated factor.
pub fn pcs_predict_interval(
    ensemble: &BootstrapEnsemble,
    calibration: &GammaCalibration,
    x: &[f64],
    alpha: f64,
) -> Result<Interval> {
    let bag: PredictionBag = ensemble.full_bag(x)?;
    Ok(bag.summary(alpha).scaled(calibration.gamma_hat))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcsRegressor {
    pub config: PcsConfig,
    pub screening: ScreeningReport,
    pub subset: SubsetChoice,
    /// Restricted to the chosen subset.
    pub ensemble: BootstrapEnsemble,
    pub calibration: RegressionCalibration,
}

impl PcsRegressor {
    /// Fits on dataset rows `rows`: screening uses an internal split of
    /// them, bootstrapping and calibration use all of them.
    pub fn fit(
        specs: &[AlgorithmSpec],
        dataset: &Dataset,
        rows: &[usize],
        config: &PcsConfig,
        seed: SeedSpec,
    ) -> Result<Self> {
        config.validate()?;
        if dataset.task() != Task::Regression {
            return Err(Error::TaskMismatch("PCS intervals need a continuous response".into()));
        }
        let split = screening_split(rows, config.screen_train_fraction, seed)?;
        let k = config.top_k.min(specs.len());
        let screening = screen_models(specs, &split, dataset, LossKind::Mse, k, seed.derive("screen", 0))?;
        let ensemble = fit_bootstrap_ensemble(
            &screening.selected_specs(),
            dataset,
            rows,
            config.n_bootstraps,
            seed.derive("ensemble", 0),
        )?;
        let table = ensemble.training_table(dataset)?;
        let y_all = dataset.response.continuous()?;
        let ys: Vec<f64> = rows.iter().map(|&r| y_all[r]).collect();
        let subset = if config.subset_search {
            select_model_subset(&ensemble, &table, &ys, config.alpha, config.calibration)?
        } else {
            let members: Vec<usize> = (0..ensemble.n_specs()).collect();
            let (_, w) = calibrate_members(&ensemble, &table, &ys, &members, config.alpha, config.calibration)?;
            SubsetChoice {
                members,
                mean_width: w,
                candidates: Vec::new(),
            }
        };
        let (calibration, _) =
            calibrate_members(&ensemble, &table, &ys, &subset.members, config.alpha, config.calibration)?;
        Ok(PcsRegressor {
            config: config.clone(),
            screening,
            ensemble: ensemble.restrict(&subset.members),
            subset,
            calibration,
        })
    }

    pub fn predict_interval(&self, x: &[f64]) -> Result<Interval> {
        let bag = self.ensemble.full_bag(x)?;
        Ok(self.calibration.apply(&bag.summary(self.config.alpha)))
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<Interval>> {
        let table = self.ensemble.prediction_table(x)?;
        let members: Vec<usize> = (0..self.ensemble.n_specs()).collect();
        let mut buf = Vec::new();
        Ok((0..x.rows())
            .map(|i| {
                table.bag_into(i, &members, None, &mut buf);
                buf.sort_unstable_by(f64::total_cmp);
                self.calibration.apply(&BagSummary::from_sorted(&buf, self.config.alpha))
            })
            .collect())
    }

    pub fn gamma_hat(&self) -> Option<f64> {
        match &self.calibration {
            RegressionCalibration::Multiplicative(g) => Some(g.gamma_hat),
            RegressionCalibration::Additive(_) => None,
        }
    }
}
