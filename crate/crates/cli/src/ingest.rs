//! CSV ingestion with integer-coded categoricals.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use pcs_uq_core::{Dataset, FeatureKind, Matrix, Response, Task};
use serde::{Deserialize, Serialize};

use crate::config::CsvSource;

/// Category names of one column; code `c` (from 1) is `levels[c - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnCodes {
    pub column: String,
    pub levels: Vec<String>,
}

impl ColumnCodes {
    fn code(&self, v: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == v).map(|p| p + 1)
    }
}

/// Everything needed to read later feature files the same way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub target: String,
    pub task: Task,
    pub features: Vec<String>,
    pub kinds: Vec<FeatureKind>,
    /// One entry per categorical feature.
    pub codebook: Vec<ColumnCodes>,
    /// Class names; label `c` is `classes[c]`.
    pub classes: Vec<String>,
}

impl Schema {
    fn codes(&self, column: &str) -> Option<&ColumnCodes> {
        self.codebook.iter().find(|c| c.column == column)
    }

    pub fn class_name(&self, label: usize) -> &str {
        self.classes.get(label).map_or("?", String::as_str)
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() {
        bail!("{} has an empty header", path.display());
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        let row: Vec<String> = rec.iter().map(str::to_string).collect();
        if let Some(j) = row.iter().position(String::is_empty) {
            bail!("missing value at row {}, column {}", i + 1, header[j]);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{} has no data rows", path.display());
    }
    Ok(Table { header, rows })
}

fn parse_num(v: &str, row: usize, col: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| anyhow!("non-numeric value {v:?} at row {row}, column {col}"))?;
    if !x.is_finite() {
        bail!("non-finite value {v:?} at row {row}, column {col}");
    }
    Ok(x)
}

/// Loads a training CSV and builds its schema. Category codes follow first
/// appearance.
pub fn ingest_csv(src: &CsvSource) -> Result<(Dataset, Schema)> {
    let t = read_table(&src.path)?;
    let target = src.target.clone().unwrap_or_else(|| t.header[t.header.len() - 1].clone());
    let col_of = |name: &str| {
        t.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("column {name:?} not found in {}", src.path.display()))
    };
    let ti = col_of(&target)?;
    for c in src.categorical.iter().chain(&src.drop) {
        col_of(c)?;
    }
    let feats: Vec<usize> = (0..t.header.len())
        .filter(|&j| j != ti && !src.drop.contains(&t.header[j]))
        .collect();
    if feats.is_empty() {
        bail!("no feature columns left");
    }
    let mut codebook = Vec::new();
    let mut kinds = Vec::new();
    let mut x = Matrix::zeros(t.rows.len(), feats.len());
    for (k, &j) in feats.iter().enumerate() {
        let name = &t.header[j];
        if src.categorical.contains(name) {
            let mut levels: Vec<String> = Vec::new();
            let mut index: HashMap<&str, usize> = HashMap::new();
            for (i, row) in t.rows.iter().enumerate() {
                let v = row[j].as_str();
                let code = *index.entry(v).or_insert_with(|| {
                    levels.push(v.to_string());
                    levels.len()
                });
                x.set(i, k, code as f64);
            }
            codebook.push(ColumnCodes {
                column: name.clone(),
                levels,
            });
            kinds.push(FeatureKind::Categorical);
        } else {
            for (i, row) in t.rows.iter().enumerate() {
                x.set(i, k, parse_num(&row[j], i + 1, name)?);
            }
            kinds.push(FeatureKind::Numeric);
        }
    }
    let mut classes = Vec::new();
    let response = match src.task {
        Task::Regression => Response::Continuous(
            t.rows
                .iter()
                .enumerate()
                .map(|(i, r)| parse_num(&r[ti], i + 1, &target))
                .collect::<Result<_>>()?,
        ),
        Task::Classification => {
            let mut labels = Vec::with_capacity(t.rows.len());
            for r in &t.rows {
                let v = &r[ti];
                let c = match classes.iter().position(|c| c == v) {
                    Some(c) => c,
                    None => {
                        classes.push(v.clone());
                        classes.len() - 1
                    }
                };
                labels.push(c);
            }
            if classes.len() < 2 {
                bail!("target {target:?} has a single class");
            }
            Response::Classes {
                labels,
                num_classes: classes.len(),
            }
        }
    };
    let features: Vec<String> = feats.iter().map(|&j| t.header[j].clone()).collect();
    let dataset = Dataset::new(x, response, features.clone(), kinds.clone())?;
    Ok((
        dataset,
        Schema {
            target,
            task: src.task,
            features,
            kinds,
            codebook,
            classes,
        },
    ))
}

/// Features (and the target, when present) of a CSV read with a stored
/// schema. Columns not in the schema are an error, so a file with the wrong
/// columns fails with a dimension error.
pub struct Scored {
    pub x: Matrix,
    pub y: Option<Response>,
}

pub fn read_features(path: &Path, schema: &Schema) -> Result<Scored> {
    let t = read_table(path)?;
    let ti = t.header.iter().position(|h| *h == schema.target);
    let given: Vec<usize> = (0..t.header.len()).filter(|&j| Some(j) != ti).collect();
    if given.len() != schema.features.len() {
        return Err(pcs_uq_core::Error::DimensionMismatch {
            expected: schema.features.len(),
            found: given.len(),
        }
        .into());
    }
    let mut x = Matrix::zeros(t.rows.len(), schema.features.len());
    for (k, name) in schema.features.iter().enumerate() {
        let j = t
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("feature column {name:?} missing from {}", path.display()))?;
        let codes = schema.codes(name);
        for (i, row) in t.rows.iter().enumerate() {
            let v = match codes {
                Some(c) => c
                    .code(&row[j])
                    .ok_or_else(|| anyhow!("unseen category {:?} at row {}, column {name}", row[j], i + 1))?
                    as f64,
                None => parse_num(&row[j], i + 1, name)?,
            };
            x.set(i, k, v);
        }
    }
    let y = match ti {
        None => None,
        Some(ti) => Some(match schema.task {
            Task::Regression => Response::Continuous(
                t.rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| parse_num(&r[ti], i + 1, &schema.target))
                    .collect::<Result<_>>()?,
            ),
            Task::Classification => Response::Classes {
                labels: t
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        schema
                            .classes
                            .iter()
                            .position(|c| *c == r[ti])
                            .ok_or_else(|| anyhow!("unseen class {:?} at row {}", r[ti], i + 1))
                    })
                    .collect::<Result<_>>()?,
                num_classes: schema.classes.len(),
            },
        }),
    };
    Ok(Scored { x, y })
}
