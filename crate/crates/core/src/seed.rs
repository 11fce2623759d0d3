//! Deterministic seed derivation.
//!
//! A child seed is `mix64(mix64(master ^ fnv1a(tag)) ^ mix64(index))`, where
//! `mix64` is the SplitMix64 finaliser and `fnv1a` the 64-bit FNV-1a hash of
//! the tag's UTF-8 bytes. Derivation depends only on `(master, tag, index)`,
//! so any schedule of parallel work sees the same seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::hash::{fnv1a, mix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SeedSpec {
    pub master: u64,
}

impl SeedSpec {
    pub const fn new(master: u64) -> Self {
        SeedSpec { master }
    }

    /// Child seed for `(tag, index)`.
    pub fn derive(&self, tag: &str, index: u64) -> SeedSpec {
        let t = mix64(self.master ^ fnv1a(tag.as_bytes()));
        SeedSpec {
            master: mix64(t ^ mix64(index)),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.master)
    }
}

impl From<u64> for SeedSpec {
    fn from(master: u64) -> Self {
        SeedSpec::new(master)
    }
}
