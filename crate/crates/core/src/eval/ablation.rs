//! One-factor sweeps over the PCS pipeline.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::benchmark::{run_benchmark, BenchConfig, EvalReport};
use super::methods::MethodSpec;
use super::subgroups::SubgroupScheme;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::AlgorithmSpec;
use crate::pcs::{CalibrationMode, PcsConfig};
use crate::seed::SeedSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "grid", rename_all = "snake_case")]
pub enum AblationGrid {
    /// Screened model count; subset search is turned off so every screened
    /// model enters the ensemble.
    KModels(Vec<usize>),
    NBootstraps(Vec<usize>),
    CalibrationMode(Vec<CalibrationMode>),
}

impl AblationGrid {
    pub fn len(&self) -> usize {
        match self {
            AblationGrid::KModels(g) | AblationGrid::NBootstraps(g) => g.len(),
            AblationGrid::CalibrationMode(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AblationGrid::KModels(_) => "k_models",
            AblationGrid::NBootstraps(_) => "n_bootstraps",
            AblationGrid::CalibrationMode(_) => "calibration_mode",
        }
    }

    fn value(&self, i: usize) -> String {
        match self {
            AblationGrid::KModels(g) | AblationGrid::NBootstraps(g) => format!("{}", g[i]),
            AblationGrid::CalibrationMode(g) => match g[i] {
                CalibrationMode::Multiplicative => "multiplicative".into(),
                CalibrationMode::Additive => "additive".into(),
            },
        }
    }

    fn apply(&self, i: usize, base: &PcsConfig) -> PcsConfig {
        let mut c = base.clone();
        match self {
            AblationGrid::KModels(g) => {
                c.top_k = g[i];
                c.subset_search = false;
            }
            AblationGrid::NBootstraps(g) => c.n_bootstraps = g[i],
            AblationGrid::CalibrationMode(g) => c.calibration = g[i],
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationPoint {
    pub value: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub kind: String,
    pub seed: u64,
    pub subgroup_scheme: Option<SubgroupScheme>,
    pub points: Vec<AblationPoint>,
}

/// One benchmark per grid point. All points see the same splits and
/// fitting seeds.
pub fn ablation_sweep(
    grid: &AblationGrid,
    specs: &[AlgorithmSpec],
    base: &PcsConfig,
    dataset: &Dataset,
    bench: &BenchConfig,
    seed: SeedSpec,
) -> Result<AblationReport> {
    if grid.is_empty() {
        return Err(Error::config("empty ablation grid"));
    }
    let methods: Vec<MethodSpec> = (0..grid.len())
        .map(|i| {
            let config = grid.apply(i, base);
            config.validate()?;
            Ok(MethodSpec::Pcs {
                specs: specs.to_vec(),
                config,
            })
        })
        .collect::<Result<_>>()?;
    let mut bench = bench.clone();
    bench.baseline = None;
    let out = run_benchmark(&methods, dataset, &bench, seed)?;
    Ok(AblationReport {
        kind: grid.kind().into(),
        seed: seed.master,
        subgroup_scheme: out.subgroup_scheme,
        points: out
            .reports
            .into_iter()
            .enumerate()
            .map(|(i, report)| AblationPoint {
                value: grid.value(i),
                report,
            })
            .collect(),
    })
}
