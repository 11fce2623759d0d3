//! Tabular data model and random splits.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::seed::SeedSpec;

/// Dense row-major matrix of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: rows * cols,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite feature value at row {}, column {}",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: alloc::vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row slices. All rows must share a length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Matrix::new(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Rows gathered in the given order; repeats allowed.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    /// Integer-coded at ingestion (codes start at 1).
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

/// Response vector. Class labels are zero-based: `0..num_classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    Continuous(Vec<f64>),
    Classes { labels: Vec<usize>, num_classes: usize },
}

impl Response {
    pub fn len(&self) -> usize {
        match self {
            Response::Continuous(v) => v.len(),
            Response::Classes { labels, .. } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> Task {
        match self {
            Response::Continuous(_) => Task::Regression,
            Response::Classes { .. } => Task::Classification,
        }
    }

    pub fn select(&self, idx: &[usize]) -> Response {
        match self {
            Response::Continuous(v) => Response::Continuous(idx.iter().map(|&i| v[i]).collect()),
            Response::Classes {
                labels,
                num_classes,
            } => Response::Classes {
                labels: idx.iter().map(|&i| labels[i]).collect(),
                num_classes: *num_classes,
            },
        }
    }

    pub fn continuous(&self) -> Result<&[f64]> {
        match self {
            Response::Continuous(v) => Ok(v),
            _ => Err(Error::TaskMismatch("expected a continuous response".into())),
        }
    }

    pub fn classes(&self) -> Result<(&[usize], usize)> {
        match self {
            Response::Classes {
                labels,
                num_classes,
            } => Ok((labels, *num_classes)),
            _ => Err(Error::TaskMismatch("expected class labels".into())),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            Response::Continuous(v) => {
                if v.iter().any(|y| !y.is_finite()) {
                    return Err(Error::domain("non-finite response value"));
                }
            }
            Response::Classes {
                labels,
                num_classes,
            } => {
                if *num_classes < 1 {
                    return Err(Error::domain("num_classes must be at least 1"));
                }
                if let Some(&bad) = labels.iter().find(|&&c| c >= *num_classes) {
                    return Err(Error::domain(format!(
                        "class label {bad} outside 0..{num_classes}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Matrix,
    pub response: Response,
    pub feature_names: Vec<String>,
    pub feature_kinds: Vec<FeatureKind>,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        response: Response,
        feature_names: Vec<String>,
        feature_kinds: Vec<FeatureKind>,
    ) -> Result<Self> {
        if features.rows() == 0 || features.cols() == 0 {
            return Err(Error::domain("dataset needs at least one row and one feature"));
        }
        if response.len() != features.rows() {
            return Err(Error::LengthMismatch {
                left: features.rows(),
                right: response.len(),
            });
        }
        if feature_names.len() != features.cols() || feature_kinds.len() != features.cols() {
            return Err(Error::DimensionMismatch {
                expected: features.cols(),
                found: feature_names.len().min(feature_kinds.len()),
            });
        }
        response.validate()?;
        Ok(Dataset {
            features,
            response,
            feature_names,
            feature_kinds,
        })
    }

    /// All-numeric dataset with generated feature names `x1..xd`.
    pub fn numeric(features: Matrix, response: Response) -> Result<Self> {
        let d = features.cols();
        let names = (1..=d).map(|j| format!("x{j}")).collect();
        Dataset::new(features, response, names, alloc::vec![FeatureKind::Numeric; d])
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn d(&self) -> usize {
        self.features.cols()
    }

    pub fn task(&self) -> Task {
        self.response.task()
    }

    pub fn num_classes(&self) -> Option<usize> {
        match &self.response {
            Response::Classes { num_classes, .. } => Some(*num_classes),
            Response::Continuous(_) => None,
        }
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(idx),
            response: self.response.select(idx),
            feature_names: self.feature_names.clone(),
            feature_kinds: self.feature_kinds.clone(),
        }
    }
}

/// Disjoint row-index lists into one dataset.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DataSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub cal: Vec<usize>,
    pub test: Vec<usize>,
}

impl DataSplit {
    /// Checks disjointness, range and a nonempty training part.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.train.is_empty() {
            return Err(Error::config("training part of the split is empty"));
        }
        let mut seen = alloc::vec![false; n];
        for &i in self
            .train
            .iter()
            .chain(&self.val)
            .chain(&self.cal)
            .chain(&self.test)
        {
            if i >= n {
                return Err(Error::config(format!("split index {i} out of range 0..{n}")));
            }
            if seen[i] {
                return Err(Error::config(format!("split index {i} appears twice")));
            }
            seen[i] = true;
        }
        Ok(())
    }
}

/// Uniformly random partition of `0..n` into parts of size
/// `floor(fraction * n)`, the remainder going to the first part.
/// Each part is returned sorted ascending.
pub fn partition(n: usize, fractions: &[f64], seed: SeedSpec) -> Result<Vec<Vec<usize>>> {
    if fractions.is_empty() {
        return Err(Error::config("no split fractions given"));
    }
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(Error::config("split fractions must lie in [0, 1]"));
    }
    let total: f64 = fractions.iter().sum();
    if math::abs(total - 1.0) > 1e-9 {
        return Err(Error::config(format!("split fractions sum to {total}, not 1")));
    }
    let mut sizes: Vec<usize> = fractions
        .iter()
        .map(|f| math::floor(f * n as f64 + 1e-9) as usize)
        .collect();
    let assigned: usize = sizes.iter().sum();
    sizes[0] += n - assigned.min(n);
    for (k, (&f, &s)) in fractions.iter().zip(&sizes).enumerate() {
        if f > 0.0 && s == 0 {
            return Err(Error::config(format!(
                "split part {k} (fraction {f}) is empty for n={n}"
            )));
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed.rng());
    let mut parts = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for s in sizes {
        let mut part = perm[start..start + s].to_vec();
        part.sort_unstable();
        parts.push(part);
        start += s;
    }
    Ok(parts)
}

/// Random split whose parts are assigned by count:
/// 1 → train; 2 → train/test; 3 → train/val/test; 4 → train/val/cal/test.
pub fn split_data(n: usize, fractions: &[f64], seed: SeedSpec) -> Result<DataSplit> {
    if fractions.len() > 4 {
        return Err(Error::config("at most four split fractions are supported"));
    }
    let mut parts = partition(n, fractions, seed)?.into_iter();
    let mut split = DataSplit {
        train: parts.next().unwrap_or_default(),
        ..DataSplit::default()
    };
    match fractions.len() {
        2 => split.test = parts.next().unwrap_or_default(),
        3 => {
            split.val = parts.next().unwrap_or_default();
            split.test = parts.next().unwrap_or_default();
        }
        4 => {
            split.val = parts.next().unwrap_or_default();
            split.cal = parts.next().unwrap_or_default();
            split.test = parts.next().unwrap_or_default();
        }
        _ => {}
    }
    split.validate(n)?;
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eighty_twenty_of_ten() {
        let s = split_data(10, &[0.8, 0.2], SeedSpec::new(1)).unwrap();
        assert_eq!(s.train.len(), 8);
        assert_eq!(s.test.len(), 2);
        assert!(s.train.iter().all(|i| !s.test.contains(i)));
    }

    #[test]
    fn identity_split() {
        let s = split_data(5, &[1.0], SeedSpec::new(1)).unwrap();
        assert_eq!(s.train, alloc::vec![0, 1, 2, 3, 4]);
        assert!(s.val.is_empty() && s.cal.is_empty() && s.test.is_empty());
    }

    #[test]
    fn remainder_goes_first() {
        let parts = partition(11, &[0.5, 0.25, 0.25], SeedSpec::new(3)).unwrap();
        let sizes: Vec<usize> = parts.iter().map(Vec::len).collect();
        assert_eq!(sizes, alloc::vec![7, 2, 2]);
    }

    #[test]
    fn different_seeds_differ() {
        let a = split_data(100, &[0.6, 0.2, 0.2], SeedSpec::new(1)).unwrap();
        let b = split_data(100, &[0.6, 0.2, 0.2], SeedSpec::new(2)).unwrap();
        assert_ne!(a, b);
        assert_eq!(a, split_data(100, &[0.6, 0.2, 0.2], SeedSpec::new(1)).unwrap());
    }

    #[test]
    fn empty_mandatory_part_rejected() {
        assert!(matches!(
            split_data(3, &[0.9, 0.1], SeedSpec::new(0)),
            Err(Error::Config(_))
        ));
        assert!(split_data(10, &[0.5, 0.6], SeedSpec::new(0)).is_err());
    }

    #[test]
    fn dataset_rejects_bad_labels() {
        let x = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        let r = Response::Classes {
            labels: alloc::vec![0, 2],
            num_classes: 2,
        };
        assert!(Dataset::numeric(x, r).is_err());
    }

    #[test]
    fn matrix_rejects_nan() {
        assert!(Matrix::new(1, 2, alloc::vec![1.0, f64::NAN]).is_err());
    }
}
