use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected} columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("task mismatch: {0}")]
    TaskMismatch(String),

    #[error("training targets contain a single class; a classifier needs at least two")]
    DegenerateTargets,

    #[error("fit failed for {learner}: {reason}")]
    Fit { learner: String, reason: String },

    #[error("sample {index} has no out-of-bag bootstraps")]
    EmptyOob { index: usize },

    #[error(
        "calibration factor is infinite: {degenerate} of {used} calibration points cannot be \
         covered at any scale; increase the number of bootstraps or use different learners"
    )]
    InfiniteCalibration { degenerate: usize, used: usize },

    #[error("calibration set too small: rank {rank} exceeds {size} scores at alpha={alpha}")]
    CalibrationSetTooSmall { rank: usize, size: usize, alpha: f64 },

    #[error("no candidate succeeded: {0}")]
    NoCandidate(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
