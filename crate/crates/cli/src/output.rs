//! Atomic file output and report tables.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use pcs_uq_core::eval::{AblationReport, BenchmarkReport, EvalReport, Stat};
use serde::Serialize;

/// Writes `bytes` to a temporary file in the destination directory, then
/// renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Builds CSV text in memory so it can be written atomically.
pub struct CsvText(pub(crate) csv::Writer<Vec<u8>>);

impl CsvText {
    pub fn new(header: &[&str]) -> Result<CsvText> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        Ok(CsvText(w))
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.0.write_record(fields)?;
        Ok(())
    }

    pub fn write(self, path: &Path) -> Result<()> {
        let bytes = self.0.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        write_atomic(path, &bytes)
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn stat_fields(s: Option<Stat>) -> [String; 2] {
    [opt(s.map(|s| s.mean)), opt(s.and_then(|s| s.se))]
}

const SUMMARY_HEADER: [&str; 8] = [
    "coverage",
    "coverage_se",
    "size_metric",
    "size",
    "size_se",
    "percent_reduction",
    "failures",
    "repeats",
];

fn summary_fields(r: &EvalReport) -> Vec<String> {
    let [c, cse] = stat_fields(r.coverage);
    let [s, sse] = stat_fields(r.size);
    vec![
        c,
        cse,
        r.size_metric.clone(),
        s,
        sse,
        opt(r.percent_reduction),
        r.failures.to_string(),
        r.repeats.len().to_string(),
    ]
}

/// `report.json`, `report.csv` and the figure tables of a benchmark.
pub fn write_benchmark(dir: &Path, rep: &BenchmarkReport) -> Result<()> {
    write_json(&dir.join("report.json"), rep)?;
    let mut header = vec!["method"];
    header.extend(SUMMARY_HEADER);
    let mut t = CsvText::new(&header)?;
    for r in &rep.reports {
        let mut f = vec![r.method.clone()];
        f.extend(summary_fields(r));
        t.row(f)?;
    }
    t.write(&dir.join("report.csv"))?;

    let figs = dir.join("figures");
    let mut sg = CsvText::new(&["method", "subgroup", "label", "count", "coverage", "size"])?;
    let mut rp = CsvText::new(&["method", "repeat", "seed", "coverage", "size", "excluded_calibration_points", "error"])?;
    for r in &rep.reports {
        for s in &r.subgroups {
            sg.row([
                r.method.clone(),
                s.id.to_string(),
                s.label.clone(),
                s.count.to_string(),
                opt(s.coverage),
                opt(s.size),
            ])?;
        }
        for x in &r.repeats {
            rp.row([
                r.method.clone(),
                x.repeat.to_string(),
                x.seed.to_string(),
                opt(x.coverage),
                opt(x.size),
                x.excluded_calibration_points.to_string(),
                x.error.clone().unwrap_or_default(),
            ])?;
        }
    }
    sg.write(&figs.join("subgroup_coverage.csv"))?;
    rp.write(&figs.join("repeats.csv"))
}

/// `report.json`, `report.csv` and the figure tables of an ablation.
pub fn write_ablation(dir: &Path, rep: &AblationReport) -> Result<()> {
    write_json(&dir.join("report.json"), rep)?;
    let mut header = vec![rep.kind.as_str()];
    header.extend(SUMMARY_HEADER);
    let mut t = CsvText::new(&header)?;
    let mut sg = CsvText::new(&[rep.kind.as_str(), "subgroup", "label", "count", "coverage", "size"])?;
    for p in &rep.points {
        let mut f = vec![p.value.clone()];
        f.extend(summary_fields(&p.report));
        t.row(f)?;
        for s in &p.report.subgroups {
            sg.row([
                p.value.clone(),
                s.id.to_string(),
                s.label.clone(),
                s.count.to_string(),
                opt(s.coverage),
                opt(s.size),
            ])?;
        }
    }
    let bytes = t.0.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    write_atomic(&dir.join("report.csv"), &bytes)?;
    write_atomic(&dir.join("figures").join(format!("ablation_{}.csv", rep.kind)), &bytes)?;
    sg.write(&dir.join("figures").join(format!("ablation_{}_subgroups.csv", rep.kind)))
}
