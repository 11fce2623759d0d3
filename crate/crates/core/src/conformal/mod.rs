//! Conformal baselines for intervals and prediction sets.

mod classification;
mod regression;
mod union;

pub use classification::{
    class_rank, majority_set, Aps, MajorityVoteClassification, Raps, TopK, RAPS_LAMBDA_GRID,
};
pub use regression::{
    MajorityVoteRegression, PcsCh13, SplitConformal, StudentizedConformal, SIGMA_FLOOR,
};
pub use union::{majority_union, IntervalUnion};
