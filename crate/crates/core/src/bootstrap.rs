//! Bootstrap resamples and their out-of-bag bookkeeping.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::SeedSpec;

/// `B` resamples of `0..n` drawn with replacement, plus the inverse map
/// `oob[i]` = bootstraps whose resample does not contain `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapPlan {
    n: usize,
    resamples: Vec<Vec<usize>>,
    oob: Vec<Vec<usize>>,
}

impl BootstrapPlan {
    /// Each resample `b` is drawn from its own stream `seed.derive("resample", b)`.
    pub fn generate(n: usize, n_bootstraps: usize, seed: SeedSpec) -> Result<Self> {
        if n < 2 {
            return Err(Error::config("bootstrap plan needs n >= 2"));
        }
        if n_bootstraps < 1 {
            return Err(Error::config("bootstrap plan needs B >= 1"));
        }
        let resamples = (0..n_bootstraps)
            .map(|b| {
                let mut rng = seed.derive("resample", b as u64).rng();
                (0..n).map(|_| rng.random_range(0..n)).collect()
            })
            .collect();
        Self::from_resamples(n, resamples)
    }

    /// Plan from explicit resamples; out-of-bag sets are computed exactly.
    pub fn from_resamples(n: usize, resamples: Vec<Vec<usize>>) -> Result<Self> {
        let mut oob: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
        let mut in_bag = alloc::vec![false; n];
        for (b, r) in resamples.iter().enumerate() {
            in_bag.iter_mut().for_each(|f| *f = false);
            for &i in r {
                if i >= n {
                    return Err(Error::config("resample index out of range"));
                }
                in_bag[i] = true;
            }
            for (i, &inside) in in_bag.iter().enumerate() {
                if !inside {
                    oob[i].push(b);
                }
            }
        }
        Ok(BootstrapPlan { n, resamples, oob })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_bootstraps(&self) -> usize {
        self.resamples.len()
    }

    pub fn resample(&self, b: usize) -> &[usize] {
        &self.resamples[b]
    }

    pub fn resamples(&self) -> &[Vec<usize>] {
        &self.resamples
    }

    /// Bootstraps (ascending) in which sample `i` is out of bag.
    pub fn oob(&self, i: usize) -> &[usize] {
        &self.oob[i]
    }

    /// `Σ_i |oob(i)| / (n·B)`.
    pub fn oob_fraction(&self) -> f64 {
        let total: usize = self.oob.iter().map(Vec::len).sum();
        total as f64 / (self.n * self.resamples.len()) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn forced_two_point_plan() {
        let p = BootstrapPlan::from_resamples(2, alloc::vec![alloc::vec![0, 0]]).unwrap();
        assert!(p.oob(0).is_empty());
        assert_eq!(p.oob(1), &[0]);
    }

    #[test]
    fn oob_fraction_concentrates() {
        let p = BootstrapPlan::generate(100, 1000, SeedSpec::new(11)).unwrap();
        let f = p.oob_fraction();
        assert!((0.35..=0.385).contains(&f), "{f}");
    }

    #[test]
    fn rejects_tiny_inputs() {
        assert!(BootstrapPlan::generate(1, 5, SeedSpec::new(0)).is_err());
        assert!(BootstrapPlan::generate(5, 0, SeedSpec::new(0)).is_err());
    }

    proptest! {
        #[test]
        fn oob_is_exact_absence(n in 2usize..40, b in 1usize..30, seed in any::<u64>()) {
            let p = BootstrapPlan::generate(n, b, SeedSpec::new(seed)).unwrap();
            for i in 0..n {
                for bb in 0..b {
                    let absent = !p.resample(bb).contains(&i);
                    prop_assert_eq!(p.oob(i).contains(&bb), absent);
                }
            }
            prop_assert_eq!(&p, &BootstrapPlan::generate(n, b, SeedSpec::new(seed)).unwrap());
        }
    }
}
