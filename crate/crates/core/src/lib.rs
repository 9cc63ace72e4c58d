//! State estimation with graphical state space models.
//!
//! The crate pairs a sliding-window factor graph estimator built on a
//! partitioned discretization ([`gssm`]) with the baselines it is measured
//! against: the linear and extended Kalman filters ([`kalman`]) and the
//! standard sliding-window smoother over the unified state
//! ([`factor::SlidingWindowSmoother`]). The [`radar`] module reproduces a
//! range-only tracking scenario and [`report`] turns runs into CSV series
//! and RMSE summaries.

pub mod error;
pub mod factor;
pub mod gssm;
pub mod kalman;
pub mod model;
pub mod radar;
pub mod report;

pub use error::{Error, Result};
pub use factor::{
    marginalize, solve_normal_equations, Factor, FactorKind, FactorWindow, GaussNewtonOptions,
    Observation, PriorMode, SlidingWindowSmoother, SolveResult, VarId,
};
pub use gssm::{dimension_report, DimensionReport, GssmEstimate, GssmPriors, GssmWindow};
pub use kalman::{CovarianceUpdate, KalmanState};
pub use model::{
    discretize_linear, discretize_partitioned, BlockSpec, ContinuousLinearSystem,
    DiscreteLinearSystem, GaussianBelief, MeasurementModel, PartitionedContinuousSystem,
    PartitionedDiscreteSystem,
};
pub use radar::{EstimatorKind, ScenarioConfig, TruthMode};
pub use report::{compute_rmse, EstimateSeries, RmseSummary};
