//! The repo-wide quantile convention.
//!
//! `quantile(S, β)` is the `⌈β·m⌉`-th smallest of the `m` values (1-based,
//! no interpolation), with `β = 0` mapped to the minimum. The rank is computed
//! with a `1e-9` slack so that products such as `0.95 * 100` that land a hair
//! above an integer in binary floating point do not skip an order statistic.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

const RANK_SLACK: f64 = 1e-9;

/// 1-based rank `⌈β·m⌉`, clamped to `[1, m]`.
pub fn quantile_rank(beta: f64, m: usize) -> usize {
    let r = math::ceil(beta * m as f64 - RANK_SLACK);
    (r.max(1.0) as usize).min(m)
}

/// 1-based rank `⌈(1-α)(m+1)⌉` used by split-conformal style calibration.
/// May exceed `m`; callers treat that as an infinite threshold.
pub fn conformal_rank(alpha: f64, m: usize) -> usize {
    let r = math::ceil((1.0 - alpha) * (m as f64 + 1.0) - RANK_SLACK);
    r.max(1.0) as usize
}

/// The `rank`-th smallest value (1-based). `values` is reordered.
pub fn order_statistic(values: &mut [f64], rank: usize) -> f64 {
    debug_assert!(rank >= 1 && rank <= values.len());
    let (_, v, _) = values.select_nth_unstable_by(rank - 1, f64::total_cmp);
    *v
}

pub fn quantile(values: &[f64], beta: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("quantile of an empty multiset"));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::domain("quantile level outside [0, 1]"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("quantile of a multiset containing NaN"));
    }
    let rank = quantile_rank(beta, values.len());
    let mut buf: Vec<f64> = values.to_vec();
    Ok(order_statistic(&mut buf, rank))
}

/// Quantiles of a multiset that is already sorted ascending.
pub fn quantile_sorted(sorted: &[f64], beta: f64) -> f64 {
    sorted[quantile_rank(beta, sorted.len()) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn median_of_one_to_ten() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(quantile(&v, 0.5).unwrap(), 5.0);
    }

    #[test]
    fn singleton() {
        for b in [0.0, 0.3, 1.0] {
            assert_eq!(quantile(&[3.0], b).unwrap(), 3.0);
        }
    }

    #[test]
    fn ninety_percent_of_four() {
        assert_eq!(quantile(&[7.0, 2.0, 9.0, 7.0], 0.9).unwrap(), 9.0);
    }

    #[test]
    fn beta_zero_is_minimum() {
        assert_eq!(quantile(&[4.0, -1.0, 2.0], 0.0).unwrap(), -1.0);
    }

    #[test]
    fn float_products_do_not_skip_ranks() {
        assert_eq!(quantile_rank(0.95, 100), 95);
        assert_eq!(quantile_rank(0.05, 100), 5);
        assert_eq!(quantile_rank(0.9, 10), 9);
        assert_eq!(conformal_rank(0.1, 9), 9);
        assert_eq!(conformal_rank(0.1, 8), 9);
    }

    #[test]
    fn empty_is_error() {
        assert!(quantile(&[], 0.5).is_err());
    }

    proptest! {
        #[test]
        fn monotone_and_member(v in prop::collection::vec(-1e6f64..1e6, 1..60),
                               a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let ql = quantile(&v, lo).unwrap();
            let qh = quantile(&v, hi).unwrap();
            prop_assert!(ql <= qh);
            prop_assert!(v.contains(&ql) && v.contains(&qh));
        }

        #[test]
        fn symmetric_levels_bracket_median(v in prop::collection::vec(-1e3f64..1e3, 1..60),
                                           alpha in 0.001f64..0.999) {
            let lo = quantile(&v, alpha / 2.0).unwrap();
            let mid = quantile(&v, 0.5).unwrap();
            let hi = quantile(&v, 1.0 - alpha / 2.0).unwrap();
            prop_assert!(lo <= mid && mid <= hi);
        }
    }
}
