//! Base learners behind one fit/predict contract.
//!
//! Every learner is deterministic given its [`SeedSpec`]; penalised learners
//! pick their penalty by k-fold cross-validation over a fixed log grid.

mod boosting;
mod forest;
mod knn;
pub(crate) mod linalg;
mod linear;
mod logistic;
mod optim;
pub(crate) mod tree;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{Matrix, Response, Task};
use crate::error::{Error, Result};
use crate::math;
use crate::seed::SeedSpec;

pub use boosting::BoostingParams;
pub use forest::ForestParams;
pub use tree::{MaxFeatures, TreeParams};

/// Penalty grid shared by ridge, lasso and L2 logistic regression.
pub fn penalty_grid() -> Vec<f64> {
    math::logspace(1e-4, 1e3, 10)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    /// Chosen from [`penalty_grid`] by cross-validation.
    Cv { folds: usize },
    Fixed(f64),
}

impl Default for Penalty {
    fn default() -> Self {
        Penalty::Cv { folds: 3 }
    }
}

fn default_neighbors() -> usize {
    5
}

/// A candidate algorithm and its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgorithmSpec {
    Ols,
    Ridge {
        #[serde(default)]
        penalty: Penalty,
    },
    Lasso {
        #[serde(default)]
        penalty: Penalty,
    },
    Knn {
        #[serde(default = "default_neighbors")]
        neighbors: usize,
    },
    CartTree(#[serde(default)] TreeParams),
    RandomForest(#[serde(default)] ForestParams),
    GradientBoosting(#[serde(default)] BoostingParams),
    LogisticL2 {
        #[serde(default)]
        penalty: Penalty,
    },
    /// Training mean (regression) or class frequencies (classification).
    Mean,
}

impl AlgorithmSpec {
    pub fn name(&self) -> String {
        match self {
            AlgorithmSpec::Ols => "ols".into(),
            AlgorithmSpec::Ridge { .. } => "ridge".into(),
            AlgorithmSpec::Lasso { .. } => "lasso".into(),
            AlgorithmSpec::Knn { neighbors } => format!("knn{neighbors}"),
            AlgorithmSpec::CartTree(_) => "cart_tree".into(),
            AlgorithmSpec::RandomForest(_) => "random_forest".into(),
            AlgorithmSpec::GradientBoosting(_) => "gradient_boosting".into(),
            AlgorithmSpec::LogisticL2 { .. } => "logistic_l2".into(),
            AlgorithmSpec::Mean => "mean".into(),
        }
    }

    pub fn supports(&self, task: Task) -> bool {
        match self {
            AlgorithmSpec::Ols | AlgorithmSpec::Ridge { .. } | AlgorithmSpec::Lasso { .. } => {
                task == Task::Regression
            }
            AlgorithmSpec::LogisticL2 { .. } => task == Task::Classification,
            _ => true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let penalty_ok = |p: &Penalty| match p {
            Penalty::Cv { folds } => *folds >= 2,
            Penalty::Fixed(v) => v.is_finite() && *v >= 0.0,
        };
        let ok = match self {
            AlgorithmSpec::Ridge { penalty }
            | AlgorithmSpec::Lasso { penalty }
            | AlgorithmSpec::LogisticL2 { penalty } => penalty_ok(penalty),
            AlgorithmSpec::Knn { neighbors } => *neighbors >= 1,
            AlgorithmSpec::CartTree(p) => p.is_valid(),
            AlgorithmSpec::RandomForest(p) => p.n_trees >= 1 && p.tree.is_valid(),
            AlgorithmSpec::GradientBoosting(p) => {
                p.n_rounds >= 1 && p.learning_rate > 0.0 && p.max_depth >= 1
            }
            AlgorithmSpec::Ols | AlgorithmSpec::Mean => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid hyperparameters for {}", self.name())))
        }
    }

    /// Default regression candidates.
    pub fn regression_zoo() -> Vec<AlgorithmSpec> {
        alloc::vec![
            AlgorithmSpec::Ols,
            AlgorithmSpec::Ridge {
                penalty: Penalty::default()
            },
            AlgorithmSpec::Lasso {
                penalty: Penalty::default()
            },
            AlgorithmSpec::Knn { neighbors: 5 },
            AlgorithmSpec::RandomForest(ForestParams::default()),
            AlgorithmSpec::GradientBoosting(BoostingParams::default()),
        ]
    }

    /// Default classification candidates.
    pub fn classification_zoo() -> Vec<AlgorithmSpec> {
        alloc::vec![
            AlgorithmSpec::LogisticL2 {
                penalty: Penalty::default()
            },
            AlgorithmSpec::Knn { neighbors: 5 },
            AlgorithmSpec::RandomForest(ForestParams::default()),
            AlgorithmSpec::GradientBoosting(BoostingParams::default()),
        ]
    }
}

/// Class probabilities for one row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityVector {
    probs: Vec<f64>,
}

impl ProbabilityVector {
    /// Clips negatives and renormalises; an all-zero input becomes uniform.
    pub fn normalized(mut probs: Vec<f64>) -> Self {
        for p in probs.iter_mut() {
            if !(*p > 0.0) {
                *p = 0.0;
            }
        }
        let s: f64 = probs.iter().sum();
        if s > 0.0 {
            probs.iter_mut().for_each(|p| *p /= s);
        } else if !probs.is_empty() {
            let u = 1.0 / probs.len() as f64;
            probs.iter_mut().for_each(|p| *p = u);
        }
        ProbabilityVector { probs }
    }

    /// Accepts a vector that already satisfies the invariants.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::domain("probabilities must be nonnegative and nonempty"));
        }
        let s: f64 = probs.iter().sum();
        if math::abs(s - 1.0) > 1e-9 {
            return Err(Error::domain(format!("probabilities sum to {s}")));
        }
        Ok(ProbabilityVector { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    /// Classes sorted by descending probability, ties by ascending index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.probs.len()).collect();
        order.sort_by(|&a, &b| self.probs[b].total_cmp(&self.probs[a]).then(a.cmp(&b)));
        order
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (c, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = c;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Design was rank deficient; the minimum-norm solution was used.
    pub rank_deficient: bool,
    /// Penalty picked by cross-validation, if any.
    pub selected_penalty: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModelState {
    Linear(linear::LinearModel),
    Knn(knn::KnnModel),
    Tree(tree::Tree),
    Forest(forest::Forest),
    Boosting(boosting::Boosted),
    Logistic(logistic::LogisticModel),
    Constant(Vec<f64>),
}

/// A trained learner. `predict` and `predict_proba` are pure functions of
/// the stored state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: AlgorithmSpec,
    pub task: Task,
    pub n_features: usize,
    pub num_classes: Option<usize>,
    /// Hash of the training rows and seed, set by the caller that knows them.
    pub train_fingerprint: u64,
    pub diagnostics: FitDiagnostics,
    state: ModelState,
}

pub fn fit(
    spec: &AlgorithmSpec,
    features: &Matrix,
    targets: &Response,
    seed: SeedSpec,
) -> Result<FittedModel> {
    spec.validate()?;
    let n = features.rows();
    if n != targets.len() {
        return Err(Error::LengthMismatch {
            left: n,
            right: targets.len(),
        });
    }
    if n < 2 {
        return Err(Error::Fit {
            learner: spec.name(),
            reason: "need at least two training rows".into(),
        });
    }
    let task = targets.task();
    if !spec.supports(task) {
        return Err(Error::TaskMismatch(format!(
            "{} does not support {:?}",
            spec.name(),
            task
        )));
    }
    if let Response::Classes { labels, .. } = targets {
        if labels.iter().all(|&c| c == labels[0]) {
            return Err(Error::DegenerateTargets);
        }
    }
    let mut diagnostics = FitDiagnostics::default();
    let state = match (spec, targets) {
        (AlgorithmSpec::Ols, Response::Continuous(y)) => {
            let m = linear::fit_ols(features, y);
            diagnostics.rank_deficient = m.rank_deficient;
            ModelState::Linear(m)
        }
        (AlgorithmSpec::Ridge { penalty }, Response::Continuous(y)) => {
            let (m, lambda) = linear::fit_ridge(features, y, *penalty, seed);
            diagnostics.selected_penalty = Some(lambda);
            ModelState::Linear(m)
        }
        (AlgorithmSpec::Lasso { penalty }, Response::Continuous(y)) => {
            let (m, lambda) = linear::fit_lasso(features, y, *penalty, seed);
            diagnostics.selected_penalty = Some(lambda);
            ModelState::Linear(m)
        }
        (AlgorithmSpec::Knn { neighbors }, t) => {
            ModelState::Knn(knn::KnnModel::fit(features, t, *neighbors))
        }
        (AlgorithmSpec::CartTree(p), t) => {
            ModelState::Tree(tree::fit_single(features, t, p, seed))
        }
        (AlgorithmSpec::RandomForest(p), t) => {
            ModelState::Forest(forest::Forest::fit(features, t, p, seed))
        }
        (AlgorithmSpec::GradientBoosting(p), t) => {
            ModelState::Boosting(boosting::Boosted::fit(features, t, p))
        }
        (AlgorithmSpec::LogisticL2 { penalty }, Response::Classes { labels, num_classes }) => {
            let (m, lambda) =
                logistic::fit_logistic(features, labels, *num_classes, *penalty, seed);
            diagnostics.selected_penalty = Some(lambda);
            ModelState::Logistic(m)
        }
        (AlgorithmSpec::Mean, Response::Continuous(y)) => {
            ModelState::Constant(alloc::vec![y.iter().sum::<f64>() / y.len() as f64])
        }
        (AlgorithmSpec::Mean, Response::Classes { labels, num_classes }) => {
            let mut counts = alloc::vec![0.0; *num_classes];
            for &c in labels {
                counts[c] += 1.0;
            }
            ModelState::Constant(ProbabilityVector::normalized(counts).probs)
        }
        _ => unreachable!("task support checked above"),
    };
    Ok(FittedModel {
        spec: spec.clone(),
        task,
        n_features: features.cols(),
        num_classes: match targets {
            Response::Classes { num_classes, .. } => Some(*num_classes),
            Response::Continuous(_) => None,
        },
        train_fingerprint: crate::hash::fingerprint(&[n], seed.master),
        diagnostics,
        state,
    })
}

impl FittedModel {
    fn check_dims(&self, features: &Matrix) -> Result<()> {
        if features.cols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: features.cols(),
            });
        }
        Ok(())
    }

    pub fn predict(&self, features: &Matrix) -> Result<Vec<f64>> {
        if self.task != Task::Regression {
            return Err(Error::TaskMismatch("predict on a classifier".into()));
        }
        self.check_dims(features)?;
        let out = (0..features.rows())
            .map(|i| self.predict_row(features.row(i))[0])
            .collect();
        Ok(out)
    }

    pub fn predict_proba(&self, features: &Matrix) -> Result<Vec<ProbabilityVector>> {
        if self.task != Task::Classification {
            return Err(Error::TaskMismatch("predict_proba on a regressor".into()));
        }
        self.check_dims(features)?;
        Ok((0..features.rows())
            .map(|i| ProbabilityVector::normalized(self.predict_row(features.row(i))))
            .collect())
    }

    /// Raw output for one row: a single value (regression) or `C`
    /// probabilities (classification).
    pub(crate) fn predict_row(&self, x: &[f64]) -> Vec<f64> {
        match &self.state {
            ModelState::Linear(m) => alloc::vec![m.predict_row(x)],
            ModelState::Knn(m) => m.predict_row(x),
            ModelState::Tree(t) => t.predict_row(x).to_vec(),
            ModelState::Forest(f) => f.predict_row(x),
            ModelState::Boosting(b) => b.predict_row(x),
            ModelState::Logistic(m) => m.predict_row(x),
            ModelState::Constant(v) => v.clone(),
        }
    }

    /// Impurity-based importances for tree learners, normalised to sum 1.
    pub fn feature_importances(&self) -> Option<Vec<f64>> {
        match &self.state {
            ModelState::Tree(t) => Some(t.normalized_importances()),
            ModelState::Forest(f) => Some(f.importances()),
            _ => None,
        }
    }

    pub(crate) fn with_fingerprint(mut self, fingerprint: u64) -> Self {
        self.train_fingerprint = fingerprint;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    NegAccuracy,
}

impl LossKind {
    pub fn for_task(task: Task) -> LossKind {
        match task {
            Task::Regression => LossKind::Mse,
            Task::Classification => LossKind::NegAccuracy,
        }
    }
}

/// Predictions from a fitted model, either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    Values(Vec<f64>),
    Probabilities(Vec<ProbabilityVector>),
}

impl FittedModel {
    pub fn predictions(&self, features: &Matrix) -> Result<Predictions> {
        match self.task {
            Task::Regression => self.predict(features).map(Predictions::Values),
            Task::Classification => self.predict_proba(features).map(Predictions::Probabilities),
        }
    }
}

pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: targets.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::domain("loss of empty input"));
    }
    let s: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok(s / predictions.len() as f64)
}

/// `1 - accuracy` of the argmax class.
pub fn neg_accuracy(probas: &[ProbabilityVector], labels: &[usize]) -> Result<f64> {
    if probas.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: probas.len(),
            right: labels.len(),
        });
    }
    if probas.is_empty() {
        return Err(Error::domain("loss of empty input"));
    }
    let correct = probas
        .iter()
        .zip(labels)
        .filter(|(p, &y)| p.argmax() == y)
        .count();
    Ok(1.0 - correct as f64 / labels.len() as f64)
}

pub fn loss(predictions: &Predictions, targets: &Response, kind: LossKind) -> Result<f64> {
    match (kind, predictions, targets) {
        (LossKind::Mse, Predictions::Values(p), Response::Continuous(y)) => mse(p, y),
        (LossKind::NegAccuracy, Predictions::Probabilities(p), Response::Classes { labels, .. }) => {
            neg_accuracy(p, labels)
        }
        _ => Err(Error::TaskMismatch(
            "loss kind does not match predictions and targets".to_string(),
        )),
    }
}
