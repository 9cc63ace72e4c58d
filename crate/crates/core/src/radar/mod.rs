//! Range-only radar tracking: a target flying at constant velocity and
//! altitude, observed through noisy slant range.

mod estimators;
mod range;
mod scenario;
mod sim;

pub use estimators::{
    radar_ekf_config, radar_fgo_config, radar_gssm_config, run_estimator, run_fgo, run_gssm,
    RadarEkf, MIN_FACTOR_VARIANCE,
};
pub use range::{linearize_range, RangeModel};
pub use scenario::{EstimatorKind, Priors, ProcessNoise, ScenarioConfig, TruthMode};
pub use sim::{measure_range, simulate_truth, slant_range, RadarTruth, RangeMeasurements};
