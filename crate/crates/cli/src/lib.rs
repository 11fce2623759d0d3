//! The `pcs-uq` command-line harness.

pub mod config;
pub mod ingest;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use pcs_uq_core::eval::{
    ablation_sweep, build_subgroups, fit_seed, repeat_seed, run_benchmark, subgroups_for_feature, FittedMethod,
    MethodSpec, Prediction,
};
use pcs_uq_core::learners::AlgorithmSpec;
use pcs_uq_core::{Dataset, SeedSpec};
use serde::{Deserialize, Serialize};

use config::{DatasetSource, RunConfig};
use ingest::{ingest_csv, read_features, Schema};
use output::{write_json, CsvText};

pub const FORMAT_VERSION: u32 = 1;
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "pcs-uq", version, about = "PCS prediction intervals and sets: benchmarks, fitting, prediction")]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Miscoverage level; overrides the config.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Benchmark the configured methods over repeated splits.
    Bench,
    /// Fit the single configured method on the whole dataset and save it.
    Fit,
    /// Predict regions for a feature CSV with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Sweep one PCS setting over a grid.
    Ablate,
    /// Print the subgroup scheme of the dataset.
    Subgroups,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Bench => "bench",
            Command::Fit => "fit",
            Command::Predict { .. } => "predict",
            Command::Ablate => "ablate",
            Command::Subgroups => "subgroups",
        }
    }
}

/// A saved model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub code_version: String,
    pub schema: Schema,
    pub alpha: f64,
    pub seed: u64,
    pub spec: MethodSpec,
    pub fitted: FittedMethod,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<ModelFile> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let v: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let found = v.get("format_version").and_then(serde_json::Value::as_u64);
        if found != Some(u64::from(FORMAT_VERSION)) {
            bail!(
                "model file format_version {} is not supported by this binary (expects {FORMAT_VERSION})",
                found.map_or_else(|| "missing".to_string(), |f| f.to_string())
            );
        }
        serde_json::from_value(v).with_context(|| format!("decoding {}", path.display()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedRecord {
    pub stage: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

/// What was run, with which seeds, and how long it took.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    pub config: RunConfig,
    pub jobs: Option<usize>,
    pub seeds: Vec<SeedRecord>,
    pub timings: Vec<Timing>,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    command: &'a str,
    error: String,
    causes: Vec<String>,
}

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Parses nothing itself; runs an already parsed command line and returns
/// the exit code.
pub fn run(cli: Cli) -> i32 {
    let prepared = match prepare(&cli) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    match execute(&cli, &prepared) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            if let Some(out) = &prepared.out {
                let rec = ErrorRecord {
                    command: cli.command.name(),
                    error: e.to_string(),
                    causes: e.chain().skip(1).map(|c| c.to_string()).collect(),
                };
                if let Err(w) = write_json(&out.join("error.json"), &rec) {
                    eprintln!("could not write error.json: {w:#}");
                }
            }
            EXIT_FAILURE
        }
    }
}

struct Prepared {
    config: Option<RunConfig>,
    out: Option<PathBuf>,
}

fn prepare(cli: &Cli) -> Result<Prepared> {
    if cli.jobs == Some(0) {
        bail!("--jobs must be at least 1");
    }
    if let Some(a) = cli.alpha {
        if !(a > 0.0 && a < 1.0) {
            bail!("alpha must lie in (0, 1), got {a}");
        }
    }
    let config = match (&cli.command, &cli.config) {
        (Command::Predict { .. }, _) => None,
        (_, None) => bail!("{} needs --config", cli.command.name()),
        (_, Some(p)) => {
            let mut c = RunConfig::load(p)?;
            if let Some(a) = cli.alpha {
                c.alpha = a;
            }
            if let Some(s) = cli.seed {
                c.seed = s;
            }
            if let Some(o) = &cli.out {
                c.out = Some(o.clone());
            }
            c.validate()?;
            Some(c)
        }
    };
    match (&cli.command, &config) {
        (Command::Bench, Some(c)) if c.methods.is_empty() => bail!("bench needs at least one method"),
        (Command::Fit, Some(c)) if c.methods.len() != 1 => {
            bail!("fit needs exactly one method, the config lists {}", c.methods.len())
        }
        (Command::Ablate, Some(c)) if c.ablation.is_none() => bail!("ablate needs an ablation section"),
        _ => {}
    }
    let out = config.as_ref().and_then(|c| c.out.clone()).or_else(|| cli.out.clone());
    if matches!(cli.command, Command::Bench | Command::Fit | Command::Ablate) && out.is_none() {
        bail!("{} needs an output directory (--out or config \"out\")", cli.command.name());
    }
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| anyhow!("thread pool: {e}"))?;
    }
    Ok(Prepared { config, out })
}

/// Loads the configured dataset and a schema describing it.
pub fn load_dataset(cfg: &RunConfig) -> Result<(Dataset, Schema)> {
    match &cfg.dataset {
        DatasetSource::Csv(src) => ingest_csv(src),
        DatasetSource::Synthetic { generator, n, seed } => {
            let s = seed.map_or_else(|| SeedSpec::new(cfg.seed).derive("dataset", 0), SeedSpec::new);
            let ds = generator.generate(*n, s)?;
            let classes = ds.num_classes().map_or_else(Vec::new, |c| (0..c).map(|k| k.to_string()).collect());
            let schema = Schema {
                target: "y".into(),
                task: ds.task(),
                features: ds.feature_names.clone(),
                kinds: ds.feature_kinds.clone(),
                codebook: Vec::new(),
                classes,
            };
            Ok((ds, schema))
        }
    }
}

fn dataset_seed(cfg: &RunConfig) -> Option<SeedRecord> {
    match &cfg.dataset {
        DatasetSource::Synthetic { seed, .. } => Some(SeedRecord {
            stage: "dataset".into(),
            seed: seed.unwrap_or_else(|| SeedSpec::new(cfg.seed).derive("dataset", 0).master),
        }),
        DatasetSource::Csv(_) => None,
    }
}

fn repeat_seeds(cfg: &RunConfig) -> Vec<SeedRecord> {
    let master = SeedSpec::new(cfg.seed);
    let mut v = Vec::new();
    if cfg.bench.subgroups && cfg.bench.subgroup_feature.is_none() {
        v.push(SeedRecord {
            stage: "subgroups".into(),
            seed: master.derive("subgroups", 0).master,
        });
    }
    for r in 0..cfg.bench.n_repeats {
        v.push(SeedRecord {
            stage: format!("repeat {r} split"),
            seed: repeat_seed(master, r).master,
        });
        v.push(SeedRecord {
            stage: format!("repeat {r} fit"),
            seed: fit_seed(master, r).master,
        });
    }
    v
}

fn execute(cli: &Cli, p: &Prepared) -> Result<()> {
    if let Command::Predict { model, input } = &cli.command {
        return predict(model, input, p.out.as_deref());
    }
    let cfg = p.config.as_ref().expect("config is loaded for every other command");
    let t0 = Instant::now();
    let (dataset, schema) = load_dataset(cfg)?;
    let mut manifest = RunManifest {
        command: cli.command.name().into(),
        code_version: CODE_VERSION.into(),
        config: cfg.clone(),
        jobs: cli.jobs,
        seeds: dataset_seed(cfg).into_iter().collect(),
        timings: vec![Timing {
            stage: "load".into(),
            seconds: t0.elapsed().as_secs_f64(),
        }],
        warnings: Vec::new(),
    };
    let master = SeedSpec::new(cfg.seed);
    let t1 = Instant::now();
    match &cli.command {
        Command::Bench => {
            let out = p.out.as_deref().expect("checked in prepare");
            let rep = run_benchmark(&cfg.methods(), &dataset, &cfg.bench_config(), master)?;
            manifest.seeds.extend(repeat_seeds(cfg));
            collect_warnings(&mut manifest.warnings, rep.subgroup_scheme.as_ref(), &rep.reports);
            manifest.timings.push(Timing {
                stage: "benchmark".into(),
                seconds: t1.elapsed().as_secs_f64(),
            });
            output::write_benchmark(out, &rep)?;
            write_json(&out.join("manifest.json"), &manifest)?;
        }
        Command::Ablate => {
            let out = p.out.as_deref().expect("checked in prepare");
            let a = cfg.ablation.as_ref().expect("checked in prepare");
            let base = cfg.ablation_base().expect("ablation present");
            let specs = if a.specs.is_empty() {
                AlgorithmSpec::regression_zoo()
            } else {
                a.specs.clone()
            };
            let rep = ablation_sweep(&a.grid, &specs, &base, &dataset, &cfg.bench_config(), master)?;
            manifest.seeds.extend(repeat_seeds(cfg));
            let reports: Vec<_> = rep.points.iter().map(|p| p.report.clone()).collect();
            collect_warnings(&mut manifest.warnings, rep.subgroup_scheme.as_ref(), &reports);
            manifest.timings.push(Timing {
                stage: "ablation".into(),
                seconds: t1.elapsed().as_secs_f64(),
            });
            output::write_ablation(out, &rep)?;
            write_json(&out.join("manifest.json"), &manifest)?;
        }
        Command::Fit => {
            let out = p.out.as_deref().expect("checked in prepare");
            let spec = cfg.methods().remove(0);
            let rows: Vec<usize> = (0..dataset.n()).collect();
            let fitted = spec.fit(&dataset, &rows, cfg.alpha, master)?;
            let excluded = fitted.excluded_calibration_points();
            if excluded > 0 {
                manifest
                    .warnings
                    .push(format!("{excluded} calibration points had no out-of-bag models and were excluded"));
            }
            manifest.seeds.push(SeedRecord {
                stage: "fit".into(),
                seed: master.master,
            });
            manifest.timings.push(Timing {
                stage: "fit".into(),
                seconds: t1.elapsed().as_secs_f64(),
            });
            let file = ModelFile {
                format_version: FORMAT_VERSION,
                code_version: CODE_VERSION.into(),
                schema,
                alpha: cfg.alpha,
                seed: cfg.seed,
                spec,
                fitted,
            };
            write_json(&out.join("model.json"), &file)?;
            write_json(&out.join("manifest.json"), &manifest)?;
        }
        Command::Subgroups => {
            let scheme = match cfg.bench.subgroup_feature {
                Some(f) => subgroups_for_feature(&dataset, f)?,
                None => build_subgroups(&dataset, master.derive("subgroups", 0))?,
            };
            println!("{}", serde_json::to_string_pretty(&scheme)?);
            if let Some(out) = &p.out {
                write_json(&out.join("subgroups.json"), &scheme)?;
            }
        }
        Command::Predict { .. } => unreachable!(),
    }
    Ok(())
}

fn collect_warnings(
    w: &mut Vec<String>,
    scheme: Option<&pcs_uq_core::eval::SubgroupScheme>,
    reports: &[pcs_uq_core::eval::EvalReport],
) {
    if let Some(s) = scheme {
        w.extend(s.notes.iter().cloned());
    }
    for r in reports {
        for x in &r.repeats {
            if x.excluded_calibration_points > 0 {
                w.push(format!(
                    "{} repeat {}: {} calibration points had no out-of-bag models",
                    r.method, x.repeat, x.excluded_calibration_points
                ));
            }
            if let Some(e) = &x.error {
                w.push(format!("{} repeat {} failed: {e}", r.method, x.repeat));
            }
        }
    }
}

fn predict(model: &Path, input: &Path, out: Option<&Path>) -> Result<()> {
    let m = ModelFile::load(model)?;
    let scored = read_features(input, &m.schema)?;
    let preds = m.fitted.predict(&scored.x)?;
    let truth = scored.y.as_ref();
    let covered = |i: usize, p: &Prediction| -> String {
        match truth {
            None => String::new(),
            Some(pcs_uq_core::Response::Continuous(y)) => p.covers_value(y[i]).to_string(),
            Some(pcs_uq_core::Response::Classes { labels, .. }) => p.covers_class(labels[i]).to_string(),
        }
    };
    let mut t = CsvText::new(&["row", "lower", "upper", "pieces", "set", "size", "covered"])?;
    for (i, p) in preds.iter().enumerate() {
        let (lo, hi, pieces, set) = match p {
            Prediction::Interval(iv) => (iv.lower.to_string(), iv.upper.to_string(), String::new(), String::new()),
            Prediction::Union(u) => (
                u.intervals().first().map(|v| v.lower.to_string()).unwrap_or_default(),
                u.intervals().last().map(|v| v.upper.to_string()).unwrap_or_default(),
                u.intervals().iter().map(|v| format!("{}:{}", v.lower, v.upper)).collect::<Vec<_>>().join(";"),
                String::new(),
            ),
            Prediction::Set(s) => (
                String::new(),
                String::new(),
                String::new(),
                s.classes.iter().map(|&c| m.schema.class_name(c)).collect::<Vec<_>>().join(";"),
            ),
        };
        t.row([i.to_string(), lo, hi, pieces, set, p.size().to_string(), covered(i, p)])?;
    }
    match out {
        Some(dir) => t.write(&dir.join("predictions.csv")),
        None => {
            let bytes = t.0.into_inner().map_err(|e| anyhow!("{e}"))?;
            print!("{}", String::from_utf8(bytes)?);
            Ok(())
        }
    }
}
