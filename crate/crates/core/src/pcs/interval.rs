//! Prediction bags and the intervals built from them.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantile::quantile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::domain("interval lower bound exceeds upper bound"));
        }
        Ok(Interval { lower, upper })
    }

    pub fn point(v: f64) -> Self {
        Interval { lower: v, upper: v }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Closed-interval membership.
    pub fn contains(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BagSource {
    /// Models whose resample excludes the point.
    OutOfBag,
    /// Every model in the ensemble.
    Full,
}

/// Multiset of ensemble predictions at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionBag {
    values: Vec<f64>,
    pub source: BagSource,
}

impl PredictionBag {
    pub fn new(values: Vec<f64>, source: BagSource) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("empty prediction bag"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::domain("prediction bag contains NaN"));
        }
        Ok(PredictionBag { values, source })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn summary(&self, alpha: f64) -> BagSummary {
        BagSummary::from_values(&self.values, alpha)
    }
}

/// The three bag quantiles every interval in this module is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BagSummary {
    pub lo: f64,
    pub median: f64,
    pub hi: f64,
}

impl BagSummary {
    /// `values` must be nonempty.
    pub fn from_values(values: &[f64], alpha: f64) -> Self {
        let mut s = values.to_vec();
        s.sort_unstable_by(f64::total_cmp);
        Self::from_sorted(&s, alpha)
    }

    pub fn from_sorted(sorted: &[f64], alpha: f64) -> Self {
        BagSummary {
            lo: quantile_sorted(sorted, alpha / 2.0),
            median: quantile_sorted(sorted, 0.5),
            hi: quantile_sorted(sorted, 1.0 - alpha / 2.0),
        }
    }

    pub fn raw(&self) -> Interval {
        Interval {
            lower: self.lo,
            upper: self.hi,
        }
    }

    /// Median-anchored scaling of both arms by `gamma`.
    pub fn scaled(&self, gamma: f64) -> Interval {
        let m = self.median;
        Interval {
            lower: m - gamma * (m - self.lo),
            upper: m + gamma * (self.hi - m),
        }
    }

    /// Smallest `gamma >= 0` with `y` inside [`Self::scaled`]; `+inf` when the
    /// arm on `y`'s side has zero length.
    pub fn min_gamma(&self, y: f64) -> f64 {
        let m = self.median;
        if y == m {
            return 0.0;
        }
        if y > m {
            let arm = self.hi - m;
            if !(arm > 0.0) {
                return f64::INFINITY;
            }
            let mut g = (y - m) / arm;
            // guard against the product rounding just below y
            while m + g * arm < y {
                g = g.next_up();
            }
            g
        } else {
            let arm = m - self.lo;
            if !(arm > 0.0) {
                return f64::INFINITY;
            }
            let mut g = (m - y) / arm;
            while m - g * arm > y {
                g = g.next_up();
            }
            g
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Midpoint-anchored interval `c ± gamma·R/2`.
    pub fn symmetric(&self, gamma: f64) -> Interval {
        let c = self.midpoint();
        let half = 0.5 * (self.hi - self.lo);
        Interval {
            lower: c - gamma * half,
            upper: c + gamma * half,
        }
    }

    /// Score for the midpoint-anchored interval: `|y - c| / (R/2)`.
    pub fn symmetric_score(&self, y: f64) -> f64 {
        let c = self.midpoint();
        let half = 0.5 * (self.hi - self.lo);
        let dev = (y - c).abs();
        if dev == 0.0 {
            return 0.0;
        }
        if !(half > 0.0) {
            return f64::INFINITY;
        }
        let mut g = dev / half;
        while g * half < dev {
            g = g.next_up();
        }
        g
    }

    /// Smallest offset `t >= 0` with `y` in `[lo - t, hi + t]`.
    pub fn min_offset(&self, y: f64) -> f64 {
        let t = (self.lo - y).max(y - self.hi).max(0.0);
        let mut t = t;
        while !(self.lo - t <= y && y <= self.hi + t) {
            t = t.next_up();
        }
        t
    }

    pub fn widened(&self, offset: f64) -> Interval {
        Interval {
            lower: self.lo - offset,
            upper: self.hi + offset,
        }
    }
}

/// `[q_{α/2}, q_{1-α/2}]` of the bag.
pub fn raw_interval(bag: &PredictionBag, alpha: f64) -> Interval {
    bag.summary(alpha).raw()
}

pub fn scale_interval(bag: &PredictionBag, alpha: f64, gamma: f64) -> Interval {
    bag.summary(alpha).scaled(gamma)
}

pub fn min_gamma_median(bag: &PredictionBag, alpha: f64, y: f64) -> f64 {
    bag.summary(alpha).min_gamma(y)
}
