//! Coverage, normalised width and set size.


use serde::{Deserialize, Serialize};

use crate::conformal::IntervalUnion;
use crate::error::{Error, Result};
use crate::math;
use crate::pcs::{Interval, PredictionSet};

/// A prediction region that can be checked against a truth and measured.
pub trait Region {
    type Truth: Copy;
    fn covers(&self, truth: Self::Truth) -> bool;
    /// Length (intervals, total for unions) or cardinality (sets).
    fn size(&self) -> f64;
}

impl Region for Interval {
    type Truth = f64;
    fn covers(&self, y: f64) -> bool {
        self.contains(y)
    }
    fn size(&self) -> f64 {
        self.width()
    }
}

impl Region for IntervalUnion {
    type Truth = f64;
    fn covers(&self, y: f64) -> bool {
        self.contains(y)
    }
    fn size(&self) -> f64 {
        self.width()
    }
}

impl Region for PredictionSet {
    type Truth = usize;
    fn covers(&self, y: usize) -> bool {
        self.contains(y)
    }
    fn size(&self) -> f64 {
        self.len() as f64
    }
}

pub fn coverage<R: Region>(regions: &[R], truths: &[R::Truth]) -> Result<f64> {
    if regions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: regions.len(),
            right: truths.len(),
        });
    }
    if regions.is_empty() {
        return Err(Error::domain("coverage of no predictions"));
    }
    let hit = regions.iter().zip(truths).filter(|(r, &t)| r.covers(t)).count();
    Ok(hit as f64 / regions.len() as f64)
}

/// `max - min` of the responses; must be positive.
pub fn response_range(responses: &[f64]) -> Result<f64> {
    let lo = responses.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = responses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let r = hi - lo;
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain("test responses have zero range"));
    }
    Ok(r)
}

/// Mean region length over the range of `responses`.
pub fn mean_normalized_width<R: Region>(regions: &[R], responses: &[f64]) -> Result<f64> {
    let range = response_range(responses)?;
    if regions.is_empty() {
        return Err(Error::domain("width of no predictions"));
    }
    Ok(regions.iter().map(Region::size).sum::<f64>() / regions.len() as f64 / range)
}

pub fn mean_normalized_set_size(sets: &[PredictionSet], num_classes: usize) -> Result<f64> {
    if num_classes < 2 {
        return Err(Error::domain("set size normalisation needs at least two classes"));
    }
    if sets.is_empty() {
        return Err(Error::domain("set size of no predictions"));
    }
    Ok(sets.iter().map(|s| s.len() as f64).sum::<f64>() / sets.len() as f64 / num_classes as f64)
}

/// `(baseline - width) / baseline · 100`.
pub fn percent_reduction(width: f64, baseline: f64) -> Result<f64> {
    if !(baseline > 0.0) {
        return Err(Error::domain("baseline width must be positive"));
    }
    Ok((baseline - width) / baseline * 100.0)
}

/// Mean and standard error (sample SD over `√count`) of repeat values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Absent for a single value.
    pub se: Option<f64>,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let se = (values.len() > 1).then(|| {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            math::sqrt(var / n)
        });
        Some(Stat { mean, se })
    }
}
