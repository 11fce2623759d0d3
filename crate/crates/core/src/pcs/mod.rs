//! PCS uncertainty quantification: screening, bootstrap ensembles,
//! out-of-bag calibration, intervals and prediction sets.

mod calibrate;
mod classification;
mod classify;
mod ensemble;
mod interval;
mod modified;
mod regression;
mod screening;

pub use calibrate::{
    calibrate_additive, calibrate_additive_summaries, calibrate_gamma, calibrate_gamma_summaries,
    AdditiveCalibration, Anchor, GammaCalibration,
};
pub(crate) use calibrate::{check_alpha, empirical_threshold};
pub use classification::{
    ensemble_mean_proba, pcs_classify_calibrate, pcs_predict_set, BagSelector, PcsClassConfig,
    PcsClassifier,
};
pub use classify::{aps_score, aps_set, calibrate_aps, mean_probability, ClassCalibration, PredictionSet};
pub(crate) use classify::{penalized_score, penalized_set};
pub use ensemble::{fit_bootstrap_ensemble, BootstrapEnsemble, PredictionTable};
pub use interval::{
    min_gamma_median, raw_interval, scale_interval, BagSource, BagSummary, Interval, PredictionBag,
};
pub use modified::{calibrate_midpoint, ModifiedPcs, ModifiedPcsConfig};
pub(crate) use modified::full_summaries;
pub use regression::{
    calibrate_members, pcs_predict_interval, select_model_subset, CalibrationMode, PcsConfig,
    PcsRegressor, RegressionCalibration, SubsetChoice, SubsetScore,
};
pub use screening::{screen_models, ScreeningEntry, ScreeningReport};
