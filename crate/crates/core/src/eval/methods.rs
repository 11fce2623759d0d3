//! Every uncertainty method behind one fit/predict interface.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::conformal::{
    Aps, IntervalUnion, MajorityVoteClassification, MajorityVoteRegression, PcsCh13, Raps, SplitConformal,
    StudentizedConformal, TopK,
};
use crate::data::{split_data, DataSplit, Dataset, Matrix, Task};
use crate::error::{Error, Result};
use crate::learners::AlgorithmSpec;
use crate::pcs::{
    Interval, ModifiedPcs, ModifiedPcsConfig, PcsClassConfig, PcsClassifier, PcsConfig, PcsRegressor,
    PredictionSet,
};
use crate::seed::SeedSpec;

/// Train / calibration fractions for the split-conformal methods.
pub const CONFORMAL_FRACTIONS: [f64; 2] = [0.8, 0.2];
/// Train / tune / calibration fractions for RAPS.
pub const RAPS_FRACTIONS: [f64; 3] = [0.7, 0.1, 0.2];

/// A method and its options. Candidate lists default to the learner zoo
/// for the task when empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodSpec {
    Pcs {
        #[serde(default)]
        specs: Vec<AlgorithmSpec>,
        #[serde(default)]
        config: PcsConfig,
    },
    ModifiedPcs {
        #[serde(default)]
        specs: Vec<AlgorithmSpec>,
        #[serde(default)]
        config: ModifiedPcsConfig,
    },
    PcsCh13 {
        #[serde(default)]
        specs: Vec<AlgorithmSpec>,
        #[serde(default)]
        config: PcsConfig,
    },
    SplitConformal {
        learner: AlgorithmSpec,
    },
    Studentized {
        learner: AlgorithmSpec,
        sigma_learner: AlgorithmSpec,
    },
    MajorityVote {
        #[serde(default)]
        learners: Vec<AlgorithmSpec>,
    },
    PcsClassification {
        #[serde(default)]
        specs: Vec<AlgorithmSpec>,
        #[serde(default)]
        config: PcsClassConfig,
    },
    TopK {
        learner: AlgorithmSpec,
    },
    Aps {
        learner: AlgorithmSpec,
    },
    Raps {
        learner: AlgorithmSpec,
    },
    MajorityVoteClassification {
        #[serde(default)]
        learners: Vec<AlgorithmSpec>,
    },
}

fn or_zoo(v: &[AlgorithmSpec], task: Task) -> Vec<AlgorithmSpec> {
    if !v.is_empty() {
        return v.to_vec();
    }
    match task {
        Task::Regression => AlgorithmSpec::regression_zoo(),
        Task::Classification => AlgorithmSpec::classification_zoo(),
    }
}

impl MethodSpec {
    /// Report label, e.g. `split_conformal[ols]`.
    pub fn label(&self) -> String {
        match self {
            MethodSpec::Pcs { .. } => "pcs".into(),
            MethodSpec::ModifiedPcs { .. } => "modified_pcs".into(),
            MethodSpec::PcsCh13 { .. } => "pcs_ch13".into(),
            MethodSpec::SplitConformal { learner } => format!("split_conformal[{}]", learner.name()),
            MethodSpec::Studentized { learner, sigma_learner } => {
                format!("studentized[{},{}]", learner.name(), sigma_learner.name())
            }
            MethodSpec::MajorityVote { .. } => "majority_vote".into(),
            MethodSpec::PcsClassification { .. } => "pcs".into(),
            MethodSpec::TopK { learner } => format!("top_k[{}]", learner.name()),
            MethodSpec::Aps { learner } => format!("aps[{}]", learner.name()),
            MethodSpec::Raps { learner } => format!("raps[{}]", learner.name()),
            MethodSpec::MajorityVoteClassification { .. } => "majority_vote".into(),
        }
    }

    pub fn task(&self) -> Task {
        match self {
            MethodSpec::Pcs { .. }
            | MethodSpec::ModifiedPcs { .. }
            | MethodSpec::PcsCh13 { .. }
            | MethodSpec::SplitConformal { .. }
            | MethodSpec::Studentized { .. }
            | MethodSpec::MajorityVote { .. } => Task::Regression,
            _ => Task::Classification,
        }
    }

    /// Checks options and learner hyperparameters without fitting.
    pub fn validate(&self) -> Result<()> {
        let task = self.task();
        let learners: Vec<&AlgorithmSpec> = match self {
            MethodSpec::Pcs { specs, config } | MethodSpec::PcsCh13 { specs, config } => {
                config.validate()?;
                specs.iter().collect()
            }
            MethodSpec::ModifiedPcs { specs, config } => {
                config.validate()?;
                specs.iter().collect()
            }
            MethodSpec::PcsClassification { specs, config } => {
                config.validate()?;
                specs.iter().collect()
            }
            MethodSpec::SplitConformal { learner }
            | MethodSpec::TopK { learner }
            | MethodSpec::Aps { learner }
            | MethodSpec::Raps { learner } => alloc::vec![learner],
            MethodSpec::Studentized { learner, sigma_learner } => alloc::vec![learner, sigma_learner],
            MethodSpec::MajorityVote { learners } | MethodSpec::MajorityVoteClassification { learners } => {
                learners.iter().collect()
            }
        };
        for l in learners {
            l.validate()?;
            if !l.supports(task) {
                return Err(Error::TaskMismatch(format!("{} cannot be used by {}", l.name(), self.label())));
            }
        }
        Ok(())
    }

    /// Copy with every internal miscoverage level set to `alpha`.
    pub fn with_alpha(&self, alpha: f64) -> MethodSpec {
        let mut m = self.clone();
        match &mut m {
            MethodSpec::Pcs { config, .. } | MethodSpec::PcsCh13 { config, .. } => config.alpha = alpha,
            MethodSpec::ModifiedPcs { config, .. } => config.alpha = alpha,
            MethodSpec::PcsClassification { config, .. } => config.alpha = alpha,
            _ => {}
        }
        m
    }

    /// Fits on dataset rows `rows`; any held-out parts the method needs are
    /// carved out of them.
    pub fn fit(&self, dataset: &Dataset, rows: &[usize], alpha: f64, seed: SeedSpec) -> Result<FittedMethod> {
        if dataset.task() != self.task() {
            return Err(Error::TaskMismatch(format!("{} does not apply to this dataset", self.label())));
        }
        let m = self.with_alpha(alpha);
        let task = dataset.task();
        let conformal_split = || sub_split(rows, &CONFORMAL_FRACTIONS, seed);
        Ok(match &m {
            MethodSpec::Pcs { specs, config } => {
                FittedMethod::Pcs(PcsRegressor::fit(&or_zoo(specs, task), dataset, rows, config, seed)?)
            }
            MethodSpec::ModifiedPcs { specs, config } => {
                FittedMethod::ModifiedPcs(ModifiedPcs::fit(&or_zoo(specs, task), dataset, rows, config, seed)?)
            }
            MethodSpec::PcsCh13 { specs, config } => FittedMethod::PcsCh13(PcsCh13::fit(
                &or_zoo(specs, task),
                dataset,
                &conformal_split()?,
                config,
                seed,
            )?),
            MethodSpec::SplitConformal { learner } => {
                FittedMethod::SplitConformal(SplitConformal::fit(learner, dataset, &conformal_split()?, alpha, seed)?)
            }
            MethodSpec::Studentized { learner, sigma_learner } => FittedMethod::Studentized(
                StudentizedConformal::fit(learner, sigma_learner, dataset, &conformal_split()?, alpha, seed)?,
            ),
            MethodSpec::MajorityVote { learners } => FittedMethod::MajorityVote(MajorityVoteRegression::fit(
                &or_zoo(learners, task),
                dataset,
                &conformal_split()?,
                alpha,
                seed,
            )?),
            MethodSpec::PcsClassification { specs, config } => FittedMethod::PcsClassification(
                PcsClassifier::fit(&or_zoo(specs, task), dataset, rows, config, seed)?,
            ),
            MethodSpec::TopK { learner } => {
                FittedMethod::TopK(TopK::fit(learner, dataset, &conformal_split()?, alpha, seed)?)
            }
            MethodSpec::Aps { learner } => {
                FittedMethod::Aps(Aps::fit(learner, dataset, &conformal_split()?, alpha, seed)?)
            }
            MethodSpec::Raps { learner } => {
                let s = sub_split(rows, &RAPS_FRACTIONS, seed)?;
                FittedMethod::Raps(Raps::fit(learner, dataset, &s, alpha, seed)?)
            }
            MethodSpec::MajorityVoteClassification { learners } => {
                FittedMethod::MajorityVoteClassification(MajorityVoteClassification::fit(
                    &or_zoo(learners, task),
                    dataset,
                    &conformal_split()?,
                    alpha,
                    seed,
                )?)
            }
        })
    }
}

/// Splits `rows` by `fractions`: two parts become train/val, three become
/// train/val/cal.
pub fn sub_split(rows: &[usize], fractions: &[f64], seed: SeedSpec) -> Result<DataSplit> {
    let s = split_data(rows.len(), fractions, seed.derive("method-split", 0))?;
    let map = |v: &[usize]| -> Vec<usize> { v.iter().map(|&i| rows[i]).collect() };
    Ok(match fractions.len() {
        2 => DataSplit {
            train: map(&s.train),
            val: map(&s.test),
            cal: Vec::new(),
            test: Vec::new(),
        },
        3 => DataSplit {
            train: map(&s.train),
            val: map(&s.val),
            cal: map(&s.test),
            test: Vec::new(),
        },
        _ => return Err(Error::config("method splits take two or three fractions")),
    })
}

/// One point's prediction region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    Interval(Interval),
    Union(IntervalUnion),
    Set(PredictionSet),
}

impl Prediction {
    pub fn covers_value(&self, y: f64) -> bool {
        match self {
            Prediction::Interval(i) => i.contains(y),
            Prediction::Union(u) => u.contains(y),
            Prediction::Set(_) => false,
        }
    }

    pub fn covers_class(&self, c: usize) -> bool {
        match self {
            Prediction::Set(s) => s.contains(c),
            _ => false,
        }
    }

    /// Width (regression) or cardinality (classification), unnormalised.
    pub fn size(&self) -> f64 {
        match self {
            Prediction::Interval(i) => i.width(),
            Prediction::Union(u) => u.width(),
            Prediction::Set(s) => s.len() as f64,
        }
    }
}

/// A fitted method of any kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "model", rename_all = "snake_case")]
pub enum FittedMethod {
    Pcs(PcsRegressor),
    ModifiedPcs(ModifiedPcs),
    PcsCh13(PcsCh13),
    SplitConformal(SplitConformal),
    Studentized(StudentizedConformal),
    MajorityVote(MajorityVoteRegression),
    PcsClassification(PcsClassifier),
    TopK(TopK),
    Aps(Aps),
    Raps(Raps),
    MajorityVoteClassification(MajorityVoteClassification),
}

impl FittedMethod {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<Prediction>> {
        let iv = |v: Vec<Interval>| v.into_iter().map(Prediction::Interval).collect();
        let sets = |v: Vec<PredictionSet>| v.into_iter().map(Prediction::Set).collect();
        Ok(match self {
            FittedMethod::Pcs(m) => iv(m.predict(x)?),
            FittedMethod::ModifiedPcs(m) => iv(m.predict(x)?),
            FittedMethod::PcsCh13(m) => iv(m.predict(x)?),
            FittedMethod::SplitConformal(m) => iv(m.predict(x)?),
            FittedMethod::Studentized(m) => iv(m.predict(x)?),
            FittedMethod::MajorityVote(m) => m.predict(x)?.into_iter().map(Prediction::Union).collect(),
            FittedMethod::PcsClassification(m) => sets(m.predict(x)?),
            FittedMethod::TopK(m) => sets(m.predict(x)?),
            FittedMethod::Aps(m) => sets(m.predict(x)?),
            FittedMethod::Raps(m) => sets(m.predict(x)?),
            FittedMethod::MajorityVoteClassification(m) => sets(m.predict(x)?),
        })
    }

    /// Calibration points dropped for lack of out-of-bag models.
    pub fn excluded_calibration_points(&self) -> usize {
        match self {
            FittedMethod::Pcs(m) => m.calibration.excluded(),
            FittedMethod::PcsClassification(m) => m.calibration.excluded,
            _ => 0,
        }
    }
}
