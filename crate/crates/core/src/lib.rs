//! Prediction intervals and prediction sets from screened bootstrap ensembles.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. With `std`, ensemble fitting and benchmark repeats run on the
//! rayon thread pool; results are identical either way because every fit
//! draws from its own derived seed and results are collected in index order.
//!
//! Layout:
//!
//! - [`data`], [`seed`], [`bootstrap`], [`quantile`]: data model, seeding,
//!   splits, bootstrap/out-of-bag bookkeeping and the shared order-statistic
//!   quantile.
//! - [`learners`]: base regressors and classifiers behind one fit/predict
//!   contract.
//! - [`pcs`]: prediction screening, bootstrap ensembles, multiplicative
//!   calibration, classification sets and the split-calibrated variant.
//! - [`conformal`]: split/studentized conformal, majority vote, Top-K, APS,
//!   RAPS.
//! - [`eval`]: metrics, subgroups, synthetic generators, benchmark and
//!   ablation drivers.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod bootstrap;
pub mod conformal;
pub mod data;
pub mod error;
pub mod eval;
pub mod hash;
pub mod learners;
pub(crate) mod math;
pub(crate) mod parallel;
pub mod pcs;
pub mod quantile;
pub mod seed;

pub use bootstrap::BootstrapPlan;
pub use data::{DataSplit, Dataset, FeatureKind, Matrix, Response, Task};
pub use error::{Error, Result};
pub use quantile::quantile;
pub use seed::SeedSpec;
