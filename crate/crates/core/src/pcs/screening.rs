//! Prediction screening: fit every candidate on the training part, score on
//! the validation part, keep the best `k`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{DataSplit, Dataset};
use crate::error::{Error, Result};
use crate::learners::{self, AlgorithmSpec, LossKind};
use crate::parallel;
use crate::seed::SeedSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningEntry {
    pub spec: AlgorithmSpec,
    /// Validation loss, absent when the fit failed.
    pub loss: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub loss_kind: LossKind,
    /// One entry per candidate, in declaration order.
    pub entries: Vec<ScreeningEntry>,
    /// Successful candidates by ascending loss, ties by declaration order.
    pub ranked: Vec<usize>,
    /// The first `k` of `ranked`.
    pub selected: Vec<usize>,
    pub k: usize,
}

impl ScreeningReport {
    pub fn selected_specs(&self) -> Vec<AlgorithmSpec> {
        self.selected.iter().map(|&i| self.entries[i].spec.clone()).collect()
    }
}

pub fn screen_models(
    specs: &[AlgorithmSpec],
    split: &DataSplit,
    dataset: &Dataset,
    loss_kind: LossKind,
    k: usize,
    seed: SeedSpec,
) -> Result<ScreeningReport> {
    if k < 1 || k > specs.len() {
        return Err(Error::config(format!(
            "screening k={k} must lie in 1..={}",
            specs.len()
        )));
    }
    if split.val.is_empty() {
        return Err(Error::config("screening needs a nonempty validation set"));
    }
    let x_tr = dataset.features.select_rows(&split.train);
    let y_tr = dataset.response.select(&split.train);
    let x_val = dataset.features.select_rows(&split.val);
    let y_val = dataset.response.select(&split.val);
    let entries: Vec<ScreeningEntry> = parallel::map_indices(specs.len(), |j| {
        let outcome = learners::fit(&specs[j], &x_tr, &y_tr, seed.derive("screen", j as u64))
            .and_then(|m| m.predictions(&x_val))
            .and_then(|p| learners::loss(&p, &y_val, loss_kind));
        match outcome {
            Ok(l) if l.is_finite() => ScreeningEntry {
                spec: specs[j].clone(),
                loss: Some(l),
                error: None,
            },
            Ok(_) => ScreeningEntry {
                spec: specs[j].clone(),
                loss: None,
                error: Some("non-finite validation loss".into()),
            },
            Err(e) => ScreeningEntry {
                spec: specs[j].clone(),
                loss: None,
                error: Some(e.to_string()),
            },
        }
    });
    let mut ranked: Vec<usize> = (0..specs.len()).filter(|&j| entries[j].loss.is_some()).collect();
    if ranked.is_empty() {
        return Err(Error::NoCandidate("every candidate failed to fit during screening".into()));
    }
    // stable sort keeps declaration order among equal losses
    ranked.sort_by(|&a, &b| entries[a].loss.unwrap().total_cmp(&entries[b].loss.unwrap()));
    let selected = ranked.iter().take(k).copied().collect();
    Ok(ScreeningReport {
        loss_kind,
        entries,
        ranked,
        selected,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split_data, Matrix, Response};
    use rand::Rng;

    fn linear_data(n: usize) -> Dataset {
        let mut rng = SeedSpec::new(5).rng();
        let rows: Vec<[f64; 1]> = (0..n).map(|_| [rng.random_range(-1.0..1.0)]).collect();
        let y = rows.iter().map(|r| 3.0 * r[0] + 0.1 * rng.random_range(-1.0..1.0)).collect();
        Dataset::numeric(Matrix::from_rows(&rows).unwrap(), Response::Continuous(y)).unwrap()
    }

    #[test]
    fn picks_signal_over_constant() {
        let ds = linear_data(100);
        let split = split_data(100, &[0.8, 0.2], SeedSpec::new(1)).unwrap();
        let split = DataSplit {
            val: split.test,
            test: Vec::new(),
            ..split
        };
        let r = screen_models(&[AlgorithmSpec::Mean, AlgorithmSpec::Ols], &split, &ds, LossKind::Mse, 1, SeedSpec::new(0))
            .unwrap();
        assert_eq!(r.selected, alloc::vec![1]);
        let r = screen_models(&[AlgorithmSpec::Mean, AlgorithmSpec::Ols], &split, &ds, LossKind::Mse, 2, SeedSpec::new(0))
            .unwrap();
        assert_eq!(r.selected, alloc::vec![1, 0]);
    }

    #[test]
    fn duplicates_keep_declaration_order() {
        let ds = linear_data(50);
        let split = DataSplit {
            train: (0..40).collect(),
            val: (40..50).collect(),
            cal: Vec::new(),
            test: Vec::new(),
        };
        let specs = [AlgorithmSpec::Ols, AlgorithmSpec::Ols, AlgorithmSpec::Ols];
        let r = screen_models(&specs, &split, &ds, LossKind::Mse, 2, SeedSpec::new(0)).unwrap();
        assert_eq!(r.selected, alloc::vec![0, 1]);
    }

    #[test]
    fn failures_are_recorded_not_ranked() {
        let ds = linear_data(30);
        let split = DataSplit {
            train: (0..20).collect(),
            val: (20..30).collect(),
            cal: Vec::new(),
            test: Vec::new(),
        };
        let specs = [AlgorithmSpec::LogisticL2 { penalty: Default::default() }, AlgorithmSpec::Ols];
        let r = screen_models(&specs, &split, &ds, LossKind::Mse, 1, SeedSpec::new(0)).unwrap();
        assert!(r.entries[0].error.is_some());
        assert_eq!(r.ranked, alloc::vec![1]);
    }
}
