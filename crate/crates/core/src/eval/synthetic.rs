//! Synthetic data generators.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureKind, Matrix, Response};
use crate::error::{Error, Result};
use crate::math;
use crate::seed::SeedSpec;

/// Feature count of every regression generator.
pub const N_FEATURES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// `y = Σ x_j + ε`, `x ~ U(-1,1)^5`, `ε ~ N(0,1)`.
    LinearHomoscedastic,
    /// Same mean, noise sd `0.25 + |x_0|`.
    LinearHeteroscedastic,
    /// `y = 2·1{x_0 > 0} - 1{x_1 > 0.5} + ε/2`.
    Step,
    /// Friedman #1 on `U(0,1)^5` with unit noise.
    Friedman,
    /// `y = ε`, features independent of it.
    PureNoise,
    /// `x_0 ∈ {0,1}` with `P(x_0 = 1) = high_fraction`; `y = x_1 + s·ε`
    /// with `s = high_scale` in the high group and 1 otherwise.
    GroupHeteroscedastic { high_fraction: f64, high_scale: f64 },
    /// `y = x_0·ε`, `x_0 ~ U(-2,2)`.
    ScaledNoise,
    /// Labels drawn from a softmax of a random linear map of `N(0,1)^5`
    /// features; `separation` scales the logits.
    Classes { num_classes: usize, separation: f64 },
}

impl Generator {
    /// The five generators of the coverage study.
    pub fn coverage_suite() -> [Generator; 5] {
        [
            Generator::LinearHomoscedastic,
            Generator::LinearHeteroscedastic,
            Generator::Step,
            Generator::Friedman,
            Generator::PureNoise,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Generator::LinearHomoscedastic => "linear_homoscedastic",
            Generator::LinearHeteroscedastic => "linear_heteroscedastic",
            Generator::Step => "step",
            Generator::Friedman => "friedman",
            Generator::PureNoise => "pure_noise",
            Generator::GroupHeteroscedastic { .. } => "group_heteroscedastic",
            Generator::ScaledNoise => "scaled_noise",
            Generator::Classes { .. } => "classes",
        }
    }

    pub fn generate(&self, n: usize, seed: SeedSpec) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::config("synthetic sample size must be positive"));
        }
        let mut rng = seed.derive("synthetic", 0).rng();
        let d = N_FEATURES;
        let mut x = Matrix::zeros(n, d);
        let mut y = Vec::with_capacity(n);
        let mut labels = Vec::new();
        let normal = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
        let weights: Vec<f64> = match self {
            Generator::Classes { num_classes, .. } => (0..num_classes * d).map(|_| normal(&mut rng)).collect(),
            _ => Vec::new(),
        };
        for i in 0..n {
            let mut row = [0.0; N_FEATURES];
            match self {
                Generator::Friedman => row.iter_mut().for_each(|v| *v = rng.random::<f64>()),
                Generator::ScaledNoise => {
                    row.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
                    row[0] *= 2.0;
                }
                Generator::Classes { .. } => row.iter_mut().for_each(|v| *v = normal(&mut rng)),
                _ => row.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0)),
            }
            let eps = normal(&mut rng);
            let target = match *self {
                Generator::LinearHomoscedastic => row.iter().sum::<f64>() + eps,
                Generator::LinearHeteroscedastic => row.iter().sum::<f64>() + (0.25 + math::abs(row[0])) * eps,
                Generator::Step => {
                    2.0 * f64::from(u8::from(row[0] > 0.0)) - f64::from(u8::from(row[1] > 0.5)) + 0.5 * eps
                }
                Generator::Friedman => {
                    10.0 * math::sin(core::f64::consts::PI * row[0] * row[1])
                        + 20.0 * (row[2] - 0.5) * (row[2] - 0.5)
                        + 10.0 * row[3]
                        + 5.0 * row[4]
                        + eps
                }
                Generator::PureNoise => eps,
                Generator::GroupHeteroscedastic { high_fraction, high_scale } => {
                    let high = rng.random::<f64>() < high_fraction;
                    row[0] = f64::from(u8::from(high));
                    row[1] + if high { high_scale } else { 1.0 } * eps
                }
                Generator::ScaledNoise => row[0] * eps,
                Generator::Classes { num_classes, separation } => {
                    let logits: Vec<f64> = (0..num_classes)
                        .map(|c| separation * (0..d).map(|j| weights[c * d + j] * row[j]).sum::<f64>())
                        .collect();
                    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let w: Vec<f64> = logits.iter().map(|l| math::exp(l - m)).collect();
                    let mut u = rng.random::<f64>() * w.iter().sum::<f64>();
                    let mut label = num_classes - 1;
                    for (c, wc) in w.iter().enumerate() {
                        if u < *wc {
                            label = c;
                            break;
                        }
                        u -= wc;
                    }
                    labels.push(label);
                    0.0
                }
            };
            for (j, v) in row.iter().enumerate() {
                x.set(i, j, *v);
            }
            y.push(target);
        }
        let response = match *self {
            Generator::Classes { num_classes, .. } => {
                if num_classes < 2 {
                    return Err(Error::config("classification generator needs at least two classes"));
                }
                Response::Classes { labels, num_classes }
            }
            _ => Response::Continuous(y),
        };
        if let Generator::GroupHeteroscedastic { high_fraction, high_scale } = *self {
            if !(0.0..=1.0).contains(&high_fraction) || !(high_scale > 0.0) {
                return Err(Error::config("group generator needs a fraction in [0,1] and a positive scale"));
            }
        }
        let names = (0..d).map(|j| format!("x{j}")).collect();
        Dataset::new(x, response, names, alloc::vec![FeatureKind::Numeric; d])
    }
}
