//! Calibration of bag-based intervals: multiplicative (median-anchored
//! scale factor) and additive (constant widening).

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::interval::{BagSummary, PredictionBag};
use crate::error::{Error, Result};
use crate::quantile::{order_statistic, quantile_rank};

/// JSON has no infinity; non-finite scores are written as `null`.
pub(crate) mod serde_scores {
    use alloc::vec::Vec;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let o: Vec<Option<f64>> = v.iter().map(|x| x.is_finite().then_some(*x)).collect();
        o.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let o: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(o.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    Median,
    Midpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCalibration {
    pub gamma_hat: f64,
    pub alpha: f64,
    pub anchor: Anchor,
    #[serde(with = "serde_scores")]
    pub per_sample_scores: Vec<f64>,
    /// Calibration points dropped because they had no out-of-bag models.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveCalibration {
    pub offset: f64,
    pub alpha: f64,
    pub per_sample_offsets: Vec<f64>,
    pub excluded: usize,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::config("alpha must lie in (0, 1)"))
    }
}

/// The `⌈(1-α)m⌉`-th smallest score; an infinite result is an error.
pub(crate) fn empirical_threshold(scores: &[f64], alpha: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::domain("no usable calibration points"));
    }
    let mut buf = scores.to_vec();
    let t = order_statistic(&mut buf, quantile_rank(1.0 - alpha, scores.len()));
    if t.is_infinite() {
        return Err(Error::InfiniteCalibration {
            degenerate: scores.iter().filter(|s| s.is_infinite()).count(),
            used: scores.len(),
        });
    }
    Ok(t)
}

/// Median-anchored calibration from per-point bag summaries.
pub fn calibrate_gamma_summaries(
    summaries: &[BagSummary],
    responses: &[f64],
    alpha: f64,
) -> Result<GammaCalibration> {
    check_alpha(alpha)?;
    if summaries.len() != responses.len() {
        return Err(Error::LengthMismatch {
            left: summaries.len(),
            right: responses.len(),
        });
    }
    let scores: Vec<f64> = summaries
        .iter()
        .zip(responses)
        .map(|(s, &y)| s.min_gamma(y))
        .collect();
    let gamma_hat = empirical_threshold(&scores, alpha)?;
    Ok(GammaCalibration {
        gamma_hat,
        alpha,
        anchor: Anchor::Median,
        per_sample_scores: scores,
        excluded: 0,
    })
}

pub fn calibrate_gamma(bags: &[PredictionBag], responses: &[f64], alpha: f64) -> Result<GammaCalibration> {
    let summaries: Vec<BagSummary> = bags.iter().map(|b| b.summary(alpha)).collect();
    calibrate_gamma_summaries(&summaries, responses, alpha)
}

pub fn calibrate_additive_summaries(
    summaries: &[BagSummary],
    responses: &[f64],
    alpha: f64,
) -> Result<AdditiveCalibration> {
    check_alpha(alpha)?;
    if summaries.len() != responses.len() {
        return Err(Error::LengthMismatch {
            left: summaries.len(),
            right: responses.len(),
        });
    }
    let offsets: Vec<f64> = summaries
        .iter()
        .zip(responses)
        .map(|(s, &y)| s.min_offset(y))
        .collect();
    let offset = empirical_threshold(&offsets, alpha)?;
    Ok(AdditiveCalibration {
        offset,
        alpha,
        per_sample_offsets: offsets,
        excluded: 0,
    })
}

pub fn calibrate_additive(bags: &[PredictionBag], responses: &[f64], alpha: f64) -> Result<AdditiveCalibration> {
    let summaries: Vec<BagSummary> = bags.iter().map(|b| b.summary(alpha)).collect();
    calibrate_additive_summaries(&summaries, responses, alpha)
}

#[cfg(test)]
mod tests {
    use super::super::interval::{scale_interval, BagSource};
    use super::*;
    use alloc::vec;
    use rand::Rng;

    use crate::seed::SeedSpec;

    #[test]
    fn all_at_median_gives_zero() {
        let bags: Vec<PredictionBag> = (0..5)
            .map(|i| PredictionBag::new(vec![i as f64, i as f64 + 1.0, i as f64 + 2.0], BagSource::OutOfBag).unwrap())
            .collect();
        let y: Vec<f64> = (0..5).map(|i| i as f64 + 1.0).collect();
        assert_eq!(calibrate_gamma(&bags, &y, 0.1).unwrap().gamma_hat, 0.0);
    }

    #[test]
    fn ninth_of_ten_scores() {
        // bag {-1, 0, 1} with median 0 and unit arms: score = |y|
        let bags: Vec<PredictionBag> = (0..10)
            .map(|_| PredictionBag::new(vec![-1.0, 0.0, 1.0], BagSource::OutOfBag).unwrap())
            .collect();
        let y: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let c = calibrate_gamma(&bags, &y, 0.1).unwrap();
        assert!((c.gamma_hat - 0.9).abs() < 1e-12);
    }

    #[test]
    fn infinite_majority_is_an_error() {
        let bags: Vec<PredictionBag> = (0..4)
            .map(|_| PredictionBag::new(vec![2.0], BagSource::OutOfBag).unwrap())
            .collect();
        let err = calibrate_gamma(&bags, &[3.0, 3.0, 2.0, 2.0], 0.1).unwrap_err();
        assert!(matches!(err, Error::InfiniteCalibration { degenerate: 2, used: 4 }));
    }

    #[test]
    fn additive_examples() {
        let bag = PredictionBag::new(vec![0.0, 1.0, 2.0], BagSource::OutOfBag).unwrap();
        assert_eq!(calibrate_additive(&[bag.clone()], &[1.5], 0.1).unwrap().offset, 0.0);
        assert_eq!(calibrate_additive(&[bag], &[5.0], 0.1).unwrap().offset, 3.0);
    }

    fn random_instance(seed: u64) -> (Vec<PredictionBag>, Vec<f64>) {
        let mut rng = SeedSpec::new(seed).rng();
        let n = rng.random_range(5..40);
        let mut bags = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..n {
            let m = rng.random_range(3..30);
            let c: f64 = rng.random_range(-5.0..5.0);
            let v: Vec<f64> = (0..m).map(|_| c + rng.random_range(-1.0..1.0)).collect();
            bags.push(PredictionBag::new(v, BagSource::OutOfBag).unwrap());
            ys.push(c + rng.random_range(-3.0..3.0));
        }
        (bags, ys)
    }

    fn coverage_at(bags: &[PredictionBag], ys: &[f64], alpha: f64, g: f64) -> f64 {
        let hit = bags
            .iter()
            .zip(ys)
            .filter(|(b, &y)| scale_interval(b, alpha, g).contains(y))
            .count();
        hit as f64 / ys.len() as f64
    }

    #[test]
    fn gamma_matches_grid_search() {
        for seed in 0..50 {
            let (bags, ys) = random_instance(seed);
            let alpha = 0.1;
            let Ok(c) = calibrate_gamma(&bags, &ys, alpha) else {
                continue;
            };
            let grid_best = (0..=50_000)
                .map(|k| k as f64 * 1e-3)
                .find(|&g| coverage_at(&bags, &ys, alpha, g) >= 1.0 - alpha - 1e-12)
                .expect("grid reaches coverage");
            assert!(grid_best >= c.gamma_hat - 1e-12 && grid_best - c.gamma_hat <= 1e-3 + 1e-12);
        }
    }

    #[test]
    fn calibration_is_tight() {
        for seed in 100..130 {
            let (bags, ys) = random_instance(seed);
            let alpha = 0.2;
            let c = calibrate_gamma(&bags, &ys, alpha).unwrap();
            assert!(coverage_at(&bags, &ys, alpha, c.gamma_hat) >= 1.0 - alpha - 1e-12);
            let below = c
                .per_sample_scores
                .iter()
                .copied()
                .filter(|&s| s < c.gamma_hat)
                .fold(f64::NEG_INFINITY, f64::max);
            if below.is_finite() {
                assert!(coverage_at(&bags, &ys, alpha, below) < 1.0 - alpha);
            }
        }
    }

    #[test]
    fn additive_matches_grid_search() {
        for seed in 200..230 {
            let (bags, ys) = random_instance(seed);
            let c = calibrate_additive(&bags, &ys, 0.1).unwrap();
            let covered = |t: f64| {
                bags.iter()
                    .zip(&ys)
                    .filter(|(b, &y)| b.summary(0.1).widened(t).contains(y))
                    .count() as f64
                    / ys.len() as f64
            };
            let best = (0..=10_000)
                .map(|k| k as f64 * 1e-3)
                .find(|&t| covered(t) >= 0.9 - 1e-12)
                .unwrap();
            assert!(best >= c.offset - 1e-12 && best - c.offset <= 1e-3 + 1e-12);
        }
    }
}
