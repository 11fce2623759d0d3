//! Adaptive prediction sets on ensemble-mean probabilities.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::ProbabilityVector;
use crate::quantile::quantile;

/// Classes in the order they were admitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PredictionSet {
    pub classes: Vec<usize>,
}

impl PredictionSet {
    pub fn contains(&self, class: usize) -> bool {
        self.classes.contains(&class)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

/// Mean of several probability vectors of equal length.
pub fn mean_probability(vectors: &[ProbabilityVector]) -> Result<ProbabilityVector> {
    let Some(first) = vectors.first() else {
        return Err(Error::domain("mean of no probability vectors"));
    };
    let c = first.num_classes();
    let mut acc = alloc::vec![0.0; c];
    for v in vectors {
        if v.num_classes() != c {
            return Err(Error::LengthMismatch {
                left: c,
                right: v.num_classes(),
            });
        }
        for (a, p) in acc.iter_mut().zip(v.probs()) {
            *a += p;
        }
    }
    acc.iter_mut().for_each(|a| *a /= vectors.len() as f64);
    Ok(ProbabilityVector::normalized(acc))
}

/// Cumulative mass down the ranking, with an optional rank penalty
/// `lambda·(t - t_reg)⁺` added at position `t` (1-based).
pub(crate) fn cumulative_scores(p: &ProbabilityVector, penalty: Option<(f64, usize)>) -> (Vec<usize>, Vec<f64>) {
    let order = p.ranking();
    let mut cum = Vec::with_capacity(order.len());
    let mut s = 0.0;
    for (pos, &c) in order.iter().enumerate() {
        s += p.probs()[c];
        let extra = match penalty {
            Some((lambda, t_reg)) => lambda * (pos + 1).saturating_sub(t_reg) as f64,
            None => 0.0,
        };
        cum.push(s + extra);
    }
    (order, cum)
}

/// Mass of the ranking down to and including class `y`.
pub fn aps_score(p: &ProbabilityVector, y: usize) -> Result<f64> {
    penalized_score(p, y, None)
}

pub(crate) fn penalized_score(p: &ProbabilityVector, y: usize, penalty: Option<(f64, usize)>) -> Result<f64> {
    if y >= p.num_classes() {
        return Err(Error::domain("class outside the probability vector"));
    }
    let (order, cum) = cumulative_scores(p, penalty);
    let r = order.iter().position(|&c| c == y).expect("ranking is a permutation");
    Ok(cum[r])
}

/// Smallest ranking prefix whose score reaches `q`; the whole ranking when
/// it never does.
pub fn aps_set(p: &ProbabilityVector, q: f64) -> PredictionSet {
    penalized_set(p, q, None)
}

pub(crate) fn penalized_set(p: &ProbabilityVector, q: f64, penalty: Option<(f64, usize)>) -> PredictionSet {
    let (order, cum) = cumulative_scores(p, penalty);
    let r = cum.iter().position(|&s| s >= q).map_or(order.len(), |r| r + 1);
    PredictionSet {
        classes: order[..r].to_vec(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCalibration {
    pub q: f64,
    pub alpha: f64,
    pub scores: Vec<f64>,
    pub excluded: usize,
}

/// `q` = the `1-α` quantile of the APS scores.
pub fn calibrate_aps(probas: &[ProbabilityVector], labels: &[usize], alpha: f64) -> Result<ClassCalibration> {
    super::calibrate::check_alpha(alpha)?;
    if probas.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: probas.len(),
            right: labels.len(),
        });
    }
    let scores = probas
        .iter()
        .zip(labels)
        .map(|(p, &y)| aps_score(p, y))
        .collect::<Result<Vec<f64>>>()?;
    let q = quantile(&scores, 1.0 - alpha)?;
    Ok(ClassCalibration {
        q,
        alpha,
        scores,
        excluded: 0,
    })
}
