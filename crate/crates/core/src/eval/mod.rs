//! Metrics, subgroups, synthetic data and the benchmark drivers.

pub mod ablation;
pub mod benchmark;
pub mod methods;
pub mod metrics;
pub mod subgroups;
pub mod synthetic;

pub use ablation::{ablation_sweep, AblationGrid, AblationPoint, AblationReport};
pub use benchmark::{
    evaluate, fit_seed, repeat_seed, repeat_split, run_benchmark, BenchConfig, BenchmarkReport, EvalReport,
    PointEval, RepeatRecord, SubgroupRow,
};
pub use methods::{sub_split, FittedMethod, MethodSpec, Prediction, CONFORMAL_FRACTIONS, RAPS_FRACTIONS};
pub use metrics::{
    coverage, mean_normalized_set_size, mean_normalized_width, percent_reduction, response_range, Region, Stat,
};
pub use subgroups::{build_subgroups, subgroups_for_feature, BinRule, SubgroupScheme};
pub use synthetic::Generator;
