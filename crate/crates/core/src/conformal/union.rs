//! Finite unions of closed intervals and the majority-vote sweep.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::pcs::Interval;

/// Sorted, pairwise disjoint closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct IntervalUnion {
    intervals: Vec<Interval>,
}

impl IntervalUnion {
    /// Sorts and merges overlapping or touching intervals.
    pub fn normalized(mut v: Vec<Interval>) -> Self {
        v.sort_by(|a, b| a.lower.total_cmp(&b.lower).then(a.upper.total_cmp(&b.upper)));
        let mut out: Vec<Interval> = Vec::with_capacity(v.len());
        for iv in v {
            match out.last_mut() {
                Some(last) if iv.lower <= last.upper => last.upper = last.upper.max(iv.upper),
                _ => out.push(iv),
            }
        }
        IntervalUnion { intervals: out }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, y: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(y))
    }

    /// Total length of the disjoint pieces.
    pub fn width(&self) -> f64 {
        self.intervals.iter().map(Interval::width).sum()
    }
}

/// `{y : strictly more than half of the intervals contain y}`, computed by
/// sweeping the sorted endpoints.
pub fn majority_union(intervals: &[Interval]) -> IntervalUnion {
    let m = intervals.len();
    let mut coords: Vec<f64> = intervals.iter().flat_map(|i| [i.lower, i.upper]).collect();
    coords.sort_by(f64::total_cmp);
    coords.dedup();
    let mut starts: Vec<f64> = intervals.iter().map(|i| i.lower).collect();
    let mut ends: Vec<f64> = intervals.iter().map(|i| i.upper).collect();
    starts.sort_by(f64::total_cmp);
    ends.sort_by(f64::total_cmp);
    let majority = |count: usize| 2 * count > m;
    let (mut si, mut ei) = (0usize, 0usize);
    let mut active = 0usize;
    let mut pieces: Vec<Interval> = Vec::new();
    for (k, &x) in coords.iter().enumerate() {
        while si < m && starts[si] == x {
            active += 1;
            si += 1;
        }
        // closed intervals ending at x still cover x
        if majority(active) {
            pieces.push(Interval::point(x));
        }
        while ei < m && ends[ei] == x {
            active -= 1;
            ei += 1;
        }
        if majority(active) {
            if let Some(&next) = coords.get(k + 1) {
                pieces.push(Interval { lower: x, upper: next });
            }
        }
    }
    IntervalUnion::normalized(pieces)
}
