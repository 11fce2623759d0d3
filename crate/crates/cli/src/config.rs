//! Run configuration file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pcs_uq_core::eval::{AblationGrid, BenchConfig, Generator, MethodSpec};
use pcs_uq_core::learners::AlgorithmSpec;
use pcs_uq_core::pcs::PcsConfig;
use pcs_uq_core::Task;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    pub path: PathBuf,
    /// Defaults to the last column.
    #[serde(default)]
    pub target: Option<String>,
    pub task: Task,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub drop: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Csv(CsvSource),
    Synthetic {
        generator: Generator,
        n: usize,
        /// Defaults to a seed derived from the master seed.
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub n_repeats: usize,
    pub test_fraction: f64,
    pub subgroups: bool,
    pub subgroup_feature: Option<usize>,
    pub baseline: Option<String>,
}

impl Default for BenchSection {
    fn default() -> Self {
        let b = BenchConfig::default();
        BenchSection {
            n_repeats: b.n_repeats,
            test_fraction: b.test_fraction,
            subgroups: b.subgroups,
            subgroup_feature: b.subgroup_feature,
            baseline: b.baseline,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationSection {
    #[serde(flatten)]
    pub grid: AblationGrid,
    /// Candidate learners; the regression zoo when empty.
    #[serde(default)]
    pub specs: Vec<AlgorithmSpec>,
    #[serde(default)]
    pub base: PcsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub dataset: DatasetSource,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub methods: Vec<MethodSpec>,
    /// Overrides the bootstrap count of every PCS method.
    #[serde(default)]
    pub n_bootstraps: Option<usize>,
    /// Overrides the screened model count of every PCS method.
    #[serde(default)]
    pub top_k: Option<usize>,
    #[serde(default)]
    pub bench: BenchSection,
    #[serde(default)]
    pub ablation: Option<AblationSection>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_alpha() -> f64 {
    0.1
}

impl RunConfig {
    /// Reads a config; relative dataset paths resolve against the config's
    /// directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let DatasetSource::Csv(c) = &mut cfg.dataset {
            if c.path.is_relative() {
                if let Some(dir) = path.parent() {
                    c.path = dir.join(&c.path);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "config schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            );
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            bail!("alpha must lie in (0, 1), got {}", self.alpha);
        }
        if self.n_bootstraps == Some(0) {
            bail!("n_bootstraps must be at least 1");
        }
        if self.top_k == Some(0) {
            bail!("top_k must be at least 1");
        }
        self.bench_config().validate()?;
        match &self.dataset {
            DatasetSource::Synthetic { n, .. } if *n < 10 => bail!("synthetic n must be at least 10"),
            DatasetSource::Csv(c) if c.path.as_os_str().is_empty() => bail!("dataset path is empty"),
            _ => {}
        }
        for m in self.methods() {
            m.validate().with_context(|| format!("method {}", m.label()))?;
        }
        if let Some(a) = &self.ablation {
            if a.grid.is_empty() {
                bail!("ablation grid is empty");
            }
            for s in &a.specs {
                s.validate()?;
            }
        }
        Ok(())
    }

    pub fn bench_config(&self) -> BenchConfig {
        BenchConfig {
            n_repeats: self.bench.n_repeats,
            alpha: self.alpha,
            test_fraction: self.bench.test_fraction,
            subgroups: self.bench.subgroups,
            subgroup_feature: self.bench.subgroup_feature,
            baseline: self.bench.baseline.clone(),
        }
    }

    /// Methods with alpha and the B / k overrides applied.
    pub fn methods(&self) -> Vec<MethodSpec> {
        self.methods
            .iter()
            .map(|m| {
                let mut m = m.with_alpha(self.alpha);
                match &mut m {
                    MethodSpec::Pcs { config, .. } | MethodSpec::PcsCh13 { config, .. } => {
                        override_pcs(config, self.n_bootstraps, self.top_k)
                    }
                    MethodSpec::ModifiedPcs { config, .. } => {
                        config.n_bootstraps = self.n_bootstraps.unwrap_or(config.n_bootstraps);
                        config.top_k = self.top_k.unwrap_or(config.top_k);
                    }
                    MethodSpec::PcsClassification { config, .. } => {
                        config.n_bootstraps = self.n_bootstraps.unwrap_or(config.n_bootstraps);
                        config.top_k = self.top_k.unwrap_or(config.top_k);
                    }
                    _ => {}
                }
                m
            })
            .collect()
    }

    /// Ablation base config with alpha and the overrides applied.
    pub fn ablation_base(&self) -> Option<PcsConfig> {
        self.ablation.as_ref().map(|a| {
            let mut c = a.base.clone();
            c.alpha = self.alpha;
            override_pcs(&mut c, self.n_bootstraps, self.top_k);
            c
        })
    }
}

fn override_pcs(config: &mut PcsConfig, b: Option<usize>, k: Option<usize>) {
    config.n_bootstraps = b.unwrap_or(config.n_bootstraps);
    config.top_k = k.unwrap_or(config.top_k);
}
