//! The PCS classification pipeline: screen, bootstrap, calibrate APS scores
//! on out-of-bag mean probabilities, predict sets from full-ensemble means.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::calibrate::check_alpha;
use super::classify::{aps_score, aps_set, ClassCalibration, PredictionSet};
use super::ensemble::{fit_bootstrap_ensemble, BootstrapEnsemble, PredictionTable};
use super::regression::screening_split;
use super::screening::{screen_models, ScreeningReport};
use crate::data::{Dataset, Matrix, Task};
use crate::error::{Error, Result};
use crate::learners::{AlgorithmSpec, LossKind, ProbabilityVector};
use crate::quantile::quantile;
use crate::seed::SeedSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BagSelector {
    OutOfBag,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PcsClassConfig {
    pub alpha: f64,
    pub n_bootstraps: usize,
    pub top_k: usize,
    pub screen_train_fraction: f64,
}

impl Default for PcsClassConfig {
    fn default() -> Self {
        PcsClassConfig {
            alpha: 0.1,
            n_bootstraps: 100,
            top_k: 3,
            screen_train_fraction: 0.8,
        }
    }
}

impl PcsClassConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.n_bootstraps < 1 || self.top_k < 1 {
            return Err(Error::config("n_bootstraps and top_k must be at least 1"));
        }
        if !(self.screen_train_fraction > 0.0 && self.screen_train_fraction < 1.0) {
            return Err(Error::config("screen_train_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Mean class probabilities at `x` over every spec and the selected
/// bootstraps. `OutOfBag` needs the plan index `i` of a fitting row.
pub fn ensemble_mean_proba(
    ensemble: &BootstrapEnsemble,
    x: &[f64],
    selector: BagSelector,
    i: Option<usize>,
) -> Result<ProbabilityVector> {
    let m = Matrix::new(1, x.len(), x.to_vec())?;
    let table = ensemble.prediction_table(&m)?;
    let members: Vec<usize> = (0..ensemble.n_specs()).collect();
    let boots = match (selector, i) {
        (BagSelector::Full, _) => None,
        (BagSelector::OutOfBag, Some(i)) => Some(ensemble.plan.oob(i)),
        (BagSelector::OutOfBag, None) => {
            return Err(Error::config("out-of-bag mean needs the sample index"));
        }
    };
    table.mean_proba(0, &members, boots).ok_or(Error::EmptyOob { index: i.unwrap_or(0) })
}

/// APS calibration on out-of-bag mean probabilities of the fitting rows.
pub fn pcs_classify_calibrate(
    ensemble: &BootstrapEnsemble,
    table: &PredictionTable,
    labels: &[usize],
    alpha: f64,
) -> Result<ClassCalibration> {
    check_alpha(alpha)?;
    let members: Vec<usize> = (0..ensemble.n_specs()).collect();
    let mut scores = Vec::with_capacity(labels.len());
    let mut excluded = 0;
    for (i, &y) in labels.iter().enumerate() {
        match table.mean_proba(i, &members, Some(ensemble.plan.oob(i))) {
            Some(p) => scores.push(aps_score(&p, y)?),
            None => excluded += 1,
        }
    }
    if scores.is_empty() {
        return Err(Error::domain("no usable calibration points"));
    }
    let q = quantile(&scores, 1.0 - alpha)?;
    Ok(ClassCalibration {
        q,
        alpha,
        scores,
        excluded,
    })
}

pub fn pcs_predict_set(ensemble: &BootstrapEnsemble, calibration: &ClassCalibration, x: &[f64]) -> Result<PredictionSet> {
    let p = ensemble_mean_proba(ensemble, x, BagSelector::Full, None)?;
    Ok(aps_set(&p, calibration.q))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcsClassifier {
    pub config: PcsClassConfig,
    pub screening: ScreeningReport,
    pub ensemble: BootstrapEnsemble,
    pub calibration: ClassCalibration,
}

impl PcsClassifier {
    pub fn fit(
        specs: &[AlgorithmSpec],
        dataset: &Dataset,
        rows: &[usize],
        config: &PcsClassConfig,
        seed: SeedSpec,
    ) -> Result<Self> {
        config.validate()?;
        if dataset.task() != Task::Classification {
            return Err(Error::TaskMismatch("prediction sets need class labels".into()));
        }
        let split = screening_split(rows, config.screen_train_fraction, seed)?;
        let k = config.top_k.min(specs.len());
        let screening = screen_models(specs, &split, dataset, LossKind::NegAccuracy, k, seed.derive("screen", 0))?;
        let ensemble = fit_bootstrap_ensemble(
            &screening.selected_specs(),
            dataset,
            rows,
            config.n_bootstraps,
            seed.derive("ensemble", 0),
        )?;
        let table = ensemble.training_table(dataset)?;
        let (labels, _) = dataset.response.classes()?;
        let ys: Vec<usize> = rows.iter().map(|&r| labels[r]).collect();
        let calibration = pcs_classify_calibrate(&ensemble, &table, &ys, config.alpha)?;
        Ok(PcsClassifier {
            config: config.clone(),
            screening,
            ensemble,
            calibration,
        })
    }

    pub fn predict_set(&self, x: &[f64]) -> Result<PredictionSet> {
        pcs_predict_set(&self.ensemble, &self.calibration, x)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<PredictionSet>> {
        let table = self.ensemble.prediction_table(x)?;
        let members: Vec<usize> = (0..self.ensemble.n_specs()).collect();
        Ok((0..x.rows())
            .map(|i| {
                let p = table.mean_proba(i, &members, None).expect("full bag is nonempty");
                aps_set(&p, self.calibration.q)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Response;
    use crate::learners::ForestParams;
    use rand::Rng;

    fn blobs(n: usize, seed: u64) -> Dataset {
        let mut rng = SeedSpec::new(seed).rng();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let c = i % 3;
            rows.push([c as f64 + rng.random_range(-0.8..0.8), rng.random_range(-1.0..1.0)]);
            labels.push(c);
        }
        Dataset::numeric(
            Matrix::from_rows(&rows).unwrap(),
            Response::Classes {
                labels,
                num_classes: 3,
            },
        )
        .unwrap()
    }

    #[test]
    fn single_model_mean_is_its_probabilities() {
        let ds = blobs(30, 1);
        let rows: Vec<usize> = (0..30).collect();
        let e = fit_bootstrap_ensemble(&[AlgorithmSpec::Knn { neighbors: 3 }], &ds, &rows, 1, SeedSpec::new(0)).unwrap();
        let x = [1.0, 0.0];
        let mean = ensemble_mean_proba(&e, &x, BagSelector::Full, None).unwrap();
        let m = Matrix::new(1, 2, x.to_vec()).unwrap();
        assert_eq!(mean, e.model(0, 0).predict_proba(&m).unwrap()[0]);
        assert!((mean.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pipeline_sets_cover() {
        let ds = blobs(300, 2);
        let rows: Vec<usize> = (0..240).collect();
        let cfg = PcsClassConfig {
            n_bootstraps: 20,
            ..PcsClassConfig::default()
        };
        let specs = [
            AlgorithmSpec::Knn { neighbors: 7 },
            AlgorithmSpec::RandomForest(ForestParams {
                n_trees: 10,
                ..ForestParams::default()
            }),
        ];
        let m = PcsClassifier::fit(&specs, &ds, &rows, &cfg, SeedSpec::new(3)).unwrap();
        assert!(m.calibration.q <= 1.0 + 1e-9);
        let test: Vec<usize> = (240..300).collect();
        let sets = m.predict(&ds.features.select_rows(&test)).unwrap();
        let (labels, _) = ds.response.classes().unwrap();
        let hit = test.iter().zip(&sets).filter(|(&i, s)| s.contains(labels[i])).count();
        assert!(hit as f64 / 60.0 >= 0.75);
        for (k, &i) in test.iter().enumerate().take(5) {
            assert_eq!(sets[k], m.predict_set(ds.features.row(i)).unwrap());
        }
    }
}
