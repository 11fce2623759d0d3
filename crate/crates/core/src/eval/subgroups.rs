//! Subgroups along the most important feature.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureKind};
use crate::error::{Error, Result};
use crate::learners::{self, AlgorithmSpec, ForestParams};
use crate::quantile::quantile_sorted;
use crate::seed::SeedSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BinRule {
    /// One bin per listed value.
    PerCategory { values: Vec<f64> },
    /// Bin `b` holds `edges[b-1] < x <= edges[b]`; the first bin is open
    /// below and the last open above.
    Quartiles { edges: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupScheme {
    pub feature: usize,
    pub feature_name: String,
    pub rule: BinRule,
    /// Feature indices by decreasing importance.
    pub importance_ranking: Vec<usize>,
    pub notes: Vec<String>,
}

impl SubgroupScheme {
    /// Number of bins the rule defines.
    pub fn n_bins(&self) -> usize {
        match &self.rule {
            BinRule::PerCategory { values } => values.len(),
            BinRule::Quartiles { edges } => edges.len() + 1,
        }
    }

    /// Bin of a feature value; `None` for an unseen category.
    pub fn bin_of(&self, v: f64) -> Option<usize> {
        match &self.rule {
            BinRule::PerCategory { values } => values.iter().position(|&c| c == v),
            BinRule::Quartiles { edges } => Some(edges.iter().filter(|&&e| v > e).count()),
        }
    }

    /// Bin of every row of `dataset`.
    pub fn assign(&self, dataset: &Dataset, rows: &[usize]) -> Vec<Option<usize>> {
        rows.iter().map(|&r| self.bin_of(dataset.features.get(r, self.feature))).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        let name = &self.feature_name;
        match &self.rule {
            BinRule::PerCategory { values } => values.iter().map(|v| format!("{name}={v}")).collect(),
            BinRule::Quartiles { edges } => {
                let mut out = Vec::with_capacity(edges.len() + 1);
                for b in 0..=edges.len() {
                    out.push(match (b.checked_sub(1).map(|p| edges[p]), edges.get(b)) {
                        (None, Some(hi)) => format!("{name}<={hi}"),
                        (Some(lo), Some(hi)) => format!("{lo}<{name}<={hi}"),
                        (Some(lo), None) => format!("{name}>{lo}"),
                        (None, None) => format!("all {name}"),
                    });
                }
                out
            }
        }
    }
}

fn distinct_sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn feature_name(dataset: &Dataset, f: usize) -> String {
    dataset.feature_names.get(f).cloned().unwrap_or_else(|| format!("x{f}"))
}

/// Bins for feature `f`, or `None` when it is constant.
fn bin_rule(dataset: &Dataset, f: usize, notes: &mut Vec<String>) -> Option<BinRule> {
    let col = dataset.features.column(f);
    let distinct = distinct_sorted(col.clone());
    let name = feature_name(dataset, f);
    if distinct.len() < 2 {
        notes.push(format!("{name} is constant, skipped"));
        return None;
    }
    if dataset.feature_kinds.get(f) == Some(&FeatureKind::Categorical) || distinct.len() == 2 {
        return Some(BinRule::PerCategory { values: distinct });
    }
    let mut sorted = col;
    sorted.sort_by(f64::total_cmp);
    let max = sorted[sorted.len() - 1];
    let mut edges: Vec<f64> = [0.25, 0.5, 0.75].iter().map(|&b| quantile_sorted(&sorted, b)).collect();
    edges.dedup();
    // an edge at the maximum would leave the bin above it empty
    edges.retain(|&e| e < max);
    if edges.len() < 3 {
        notes.push(format!("{} empty quartile bin(s) on {name} dropped", 3 - edges.len()));
    }
    Some(BinRule::Quartiles { edges })
}

/// Bins a caller-chosen feature.
pub fn subgroups_for_feature(dataset: &Dataset, feature: usize) -> Result<SubgroupScheme> {
    if feature >= dataset.d() {
        return Err(Error::config(format!("subgroup feature {feature} out of range")));
    }
    let mut notes = Vec::new();
    let rule = bin_rule(dataset, feature, &mut notes).ok_or_else(|| Error::domain("subgroup feature is constant"))?;
    Ok(SubgroupScheme {
        feature,
        feature_name: feature_name(dataset, feature),
        rule,
        importance_ranking: Vec::new(),
        notes,
    })
}

/// Ranks features by random-forest impurity importance and bins the top
/// non-constant one.
pub fn build_subgroups(dataset: &Dataset, seed: SeedSpec) -> Result<SubgroupScheme> {
    let spec = AlgorithmSpec::RandomForest(ForestParams::default());
    let model = learners::fit(&spec, &dataset.features, &dataset.response, seed.derive("subgroup-forest", 0))?;
    let imp = model
        .feature_importances()
        .ok_or_else(|| Error::domain("forest reported no importances"))?;
    let mut ranking: Vec<usize> = (0..dataset.d()).collect();
    ranking.sort_by(|&a, &b| imp[b].total_cmp(&imp[a]).then(a.cmp(&b)));
    let mut notes = Vec::new();
    for &f in &ranking {
        if let Some(rule) = bin_rule(dataset, f, &mut notes) {
            return Ok(SubgroupScheme {
                feature: f,
                feature_name: feature_name(dataset, f),
                rule,
                importance_ranking: ranking.clone(),
                notes,
            });
        }
    }
    Err(Error::domain("every feature is constant"))
}
