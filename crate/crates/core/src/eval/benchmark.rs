//! Repeated train/test benchmark across methods.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::methods::{FittedMethod, MethodSpec, Prediction};
use super::metrics::{percent_reduction, response_range, Stat};
use super::subgroups::{build_subgroups, subgroups_for_feature, SubgroupScheme};
use crate::data::{split_data, Dataset, Response, Task};
use crate::error::{Error, Result};
use crate::parallel;
use crate::seed::SeedSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub n_repeats: usize,
    pub alpha: f64,
    pub test_fraction: f64,
    /// Report per-subgroup rows.
    pub subgroups: bool,
    /// Bin on this feature instead of the forest's top feature.
    pub subgroup_feature: Option<usize>,
    /// Label of the method that percent reductions are measured against.
    pub baseline: Option<String>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n_repeats: 10,
            alpha: 0.1,
            test_fraction: 0.2,
            subgroups: true,
            subgroup_feature: None,
            baseline: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        crate::pcs::check_alpha(self.alpha)?;
        if self.n_repeats < 1 {
            return Err(Error::config("n_repeats must be at least 1"));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::config("test_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Split seed of repeat `r`.
pub fn repeat_seed(seed: SeedSpec, r: usize) -> SeedSpec {
    seed.derive("repeat", r as u64)
}

/// Fitting seed shared by every method in repeat `r`.
pub fn fit_seed(seed: SeedSpec, r: usize) -> SeedSpec {
    repeat_seed(seed, r).derive("fit", 0)
}

/// Train/test rows of repeat `r`.
pub fn repeat_split(dataset: &Dataset, test_fraction: f64, seed: SeedSpec, r: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let s = split_data(dataset.n(), &[1.0 - test_fraction, test_fraction], repeat_seed(seed, r))?;
    Ok((s.train, s.test))
}

/// Per-point outcome on a test set.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEval {
    pub covered: Vec<bool>,
    /// Normalised size of each region.
    pub size: Vec<f64>,
}

impl PointEval {
    pub fn coverage(&self) -> f64 {
        self.covered.iter().filter(|&&c| c).count() as f64 / self.covered.len() as f64
    }

    pub fn mean_size(&self) -> f64 {
        self.size.iter().sum::<f64>() / self.size.len() as f64
    }
}

/// Scores predictions for `rows`: widths are divided by the response
/// range over `rows`, set sizes by the class count.
pub fn evaluate(preds: &[Prediction], dataset: &Dataset, rows: &[usize]) -> Result<PointEval> {
    if preds.len() != rows.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: rows.len(),
        });
    }
    if rows.is_empty() {
        return Err(Error::domain("no test points"));
    }
    match &dataset.response {
        Response::Continuous(y) => {
            let ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
            let range = response_range(&ys)?;
            Ok(PointEval {
                covered: preds.iter().zip(&ys).map(|(p, &v)| p.covers_value(v)).collect(),
                size: preds.iter().map(|p| p.size() / range).collect(),
            })
        }
        Response::Classes { labels, num_classes } => {
            if *num_classes < 2 {
                return Err(Error::domain("set size normalisation needs at least two classes"));
            }
            Ok(PointEval {
                covered: preds.iter().zip(rows).map(|(p, &r)| p.covers_class(labels[r])).collect(),
                size: preds.iter().map(|p| p.size() / *num_classes as f64).collect(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatRecord {
    pub repeat: usize,
    pub seed: u64,
    pub coverage: Option<f64>,
    pub size: Option<f64>,
    pub excluded_calibration_points: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupRow {
    pub id: usize,
    pub label: String,
    /// Test points in the bin, summed over successful repeats.
    pub count: usize,
    pub coverage: Option<f64>,
    pub size: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub task: Task,
    /// `mean_normalized_width` or `mean_normalized_set_size`.
    pub size_metric: String,
    pub coverage: Option<Stat>,
    pub size: Option<Stat>,
    pub percent_reduction: Option<f64>,
    pub subgroups: Vec<SubgroupRow>,
    pub repeats: Vec<RepeatRecord>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub config: BenchConfig,
    pub n: usize,
    pub subgroup_scheme: Option<SubgroupScheme>,
    pub reports: Vec<EvalReport>,
}

struct Outcome {
    record: RepeatRecord,
    bins: Vec<(usize, usize, f64)>,
}

fn run_one(
    method: &MethodSpec,
    dataset: &Dataset,
    cfg: &BenchConfig,
    scheme: Option<&SubgroupScheme>,
    seed: SeedSpec,
    r: usize,
) -> Outcome {
    let fs = fit_seed(seed, r);
    let mut record = RepeatRecord {
        repeat: r,
        seed: fs.master,
        coverage: None,
        size: None,
        excluded_calibration_points: 0,
        error: None,
    };
    let n_bins = scheme.map_or(0, SubgroupScheme::n_bins);
    let mut bins = alloc::vec![(0usize, 0usize, 0.0f64); n_bins];
    let res = (|| -> Result<(FittedMethod, PointEval, Vec<usize>)> {
        let (train, test) = repeat_split(dataset, cfg.test_fraction, seed, r)?;
        let fitted = method.fit(dataset, &train, cfg.alpha, fs)?;
        let preds = fitted.predict(&dataset.features.select_rows(&test))?;
        let ev = evaluate(&preds, dataset, &test)?;
        Ok((fitted, ev, test))
    })();
    match res {
        Ok((fitted, ev, test)) => {
            record.coverage = Some(ev.coverage());
            record.size = Some(ev.mean_size());
            record.excluded_calibration_points = fitted.excluded_calibration_points();
            if let Some(s) = scheme {
                for ((b, c), z) in s.assign(dataset, &test).into_iter().zip(&ev.covered).zip(&ev.size) {
                    if let Some(b) = b {
                        bins[b].0 += 1;
                        bins[b].1 += usize::from(*c);
                        bins[b].2 += z;
                    }
                }
            }
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    Outcome { record, bins }
}

/// Runs every method on `n_repeats` fresh train/test splits. Methods share
/// each repeat's split and fitting seed, so comparisons are paired.
pub fn run_benchmark(
    methods: &[MethodSpec],
    dataset: &Dataset,
    cfg: &BenchConfig,
    seed: SeedSpec,
) -> Result<BenchmarkReport> {
    cfg.validate()?;
    if methods.is_empty() {
        return Err(Error::config("no methods to benchmark"));
    }
    let task = dataset.task();
    if let Some(m) = methods.iter().find(|m| m.task() != task) {
        return Err(Error::TaskMismatch(format!("{} does not apply to this dataset", m.label())));
    }
    let scheme = if cfg.subgroups {
        Some(match cfg.subgroup_feature {
            Some(f) => subgroups_for_feature(dataset, f)?,
            None => build_subgroups(dataset, seed.derive("subgroups", 0))?,
        })
    } else {
        None
    };
    let r_n = cfg.n_repeats;
    let outcomes = parallel::map_indices(methods.len() * r_n, |t| {
        run_one(&methods[t / r_n], dataset, cfg, scheme.as_ref(), seed, t % r_n)
    });
    let labels = scheme.as_ref().map(SubgroupScheme::labels).unwrap_or_default();
    let mut reports: Vec<EvalReport> = methods
        .iter()
        .enumerate()
        .map(|(m, spec)| {
            let outs = &outcomes[m * r_n..(m + 1) * r_n];
            let ok: Vec<&RepeatRecord> = outs.iter().map(|o| &o.record).filter(|r| r.error.is_none()).collect();
            let cov: Vec<f64> = ok.iter().filter_map(|r| r.coverage).collect();
            let size: Vec<f64> = ok.iter().filter_map(|r| r.size).collect();
            let subgroups = labels
                .iter()
                .enumerate()
                .map(|(b, label)| {
                    let (count, hit, z) = outs
                        .iter()
                        .filter(|o| o.record.error.is_none())
                        .fold((0, 0, 0.0), |acc, o| (acc.0 + o.bins[b].0, acc.1 + o.bins[b].1, acc.2 + o.bins[b].2));
                    SubgroupRow {
                        id: b,
                        label: label.clone(),
                        count,
                        coverage: (count > 0).then(|| hit as f64 / count as f64),
                        size: (count > 0).then(|| z / count as f64),
                    }
                })
                .collect();
            EvalReport {
                method: spec.label(),
                task,
                size_metric: match task {
                    Task::Regression => "mean_normalized_width".into(),
                    Task::Classification => "mean_normalized_set_size".into(),
                },
                coverage: Stat::of(&cov),
                size: Stat::of(&size),
                percent_reduction: None,
                subgroups,
                repeats: outs.iter().map(|o| o.record.clone()).collect(),
                failures: outs.len() - ok.len(),
            }
        })
        .collect();
    if let Some(base) = &cfg.baseline {
        let b = reports
            .iter()
            .find(|r| &r.method == base)
            .ok_or_else(|| Error::config(format!("baseline {base} is not among the methods")))?
            .size;
        for r in &mut reports {
            r.percent_reduction = match (r.size, b) {
                (Some(s), Some(b)) => percent_reduction(s.mean, b.mean).ok(),
                _ => None,
            };
        }
    }
    Ok(BenchmarkReport {
        seed: seed.master,
        config: cfg.clone(),
        n: dataset.n(),
        subgroup_scheme: scheme,
        reports,
    })
}
