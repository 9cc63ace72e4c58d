use std::sync::Arc;

use nalgebra::{dmatrix, DMatrix, DVector};

use super::range::{linearize_range, RangeModel};
use super::scenario::{EstimatorKind, ScenarioConfig};
use super::sim::{RadarTruth, RangeMeasurements};
use crate::error::{Error, Result};
use crate::factor::{
    GaussNewtonOptions, Observation, SlidingWindowSmoother, WindowEstimate,
};
use crate::gssm::{GssmEstimate, GssmPriors, GssmWindow};
use crate::kalman::{self, KalmanState, FILTER_STATE};
use crate::model::{
    discretize_linear, discretize_partitioned, ContinuousLinearSystem, DiscreteLinearSystem,
    GaussianBelief, PartitionedContinuousSystem,
};
use crate::report::{EstimateRow, EstimateSeries};

/// Floor applied to zero process-noise variances in factor-graph estimators,
/// whose factors need a positive-definite noise block.
pub const MIN_FACTOR_VARIANCE: f64 = 1e-10;

/// EKF over the unified state `[x, ẋ, h]`.
#[derive(Debug, Clone)]
pub struct RadarEkf {
    pub system: DiscreteLinearSystem,
    pub model: RangeModel,
    pub prior: GaussianBelief,
}

impl RadarEkf {
    pub fn run(&self, measurements: &RangeMeasurements) -> Result<Vec<KalmanState>> {
        let mut state = KalmanState::new(self.prior.clone());
        let u = DVector::zeros(0);
        let mut out = Vec::with_capacity(measurements.range.len());
        for &rho in &measurements.range {
            state = kalman::predict(&state, &self.system, &u)?;
            state = kalman::update_nonlinear(&state, &self.model, &DVector::from_element(1, rho))?;
            out.push(state.clone());
        }
        Ok(out)
    }
}

fn unified_continuous(cfg: &ScenarioConfig) -> Result<ContinuousLinearSystem> {
    let p = &cfg.priors;
    let (alpha, beta) = linearize_range(p.x, p.h)?;
    ContinuousLinearSystem::new(
        dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, 0.0; 0.0, 0.0, 0.0],
        DMatrix::zeros(3, 0),
        dmatrix![alpha, 0.0, beta],
        DMatrix::zeros(3, 3),
        dmatrix![cfg.range_variance],
    )
}

fn unified_prior(cfg: &ScenarioConfig) -> (DVector<f64>, DMatrix<f64>) {
    let p = &cfg.priors;
    (
        DVector::from_vec(vec![p.x, p.xdot, p.h]),
        DMatrix::from_diagonal(&DVector::from_vec(vec![p.p_x, p.p_xdot, p.p_h])),
    )
}

pub fn radar_ekf_config(cfg: &ScenarioConfig) -> Result<RadarEkf> {
    cfg.validate()?;
    let q = &cfg.process_noise;
    let qd = DMatrix::from_diagonal(&DVector::from_vec(vec![q.x, q.xdot, 0.0]));
    let system = discretize_linear(&unified_continuous(cfg)?, cfg.dt, qd)?;
    let (mean, cov) = unified_prior(cfg);
    Ok(RadarEkf {
        system,
        model: RangeModel::new(3, 0, 2, cfg.range_variance)?,
        prior: GaussianBelief::single(FILTER_STATE, mean, cov)?,
    })
}

/// Partition `x_c = [x]`, `x_b = [h, ẋ]`: only the distance is a time
/// series; altitude and velocity are one shared variable.
pub fn radar_gssm_config(cfg: &ScenarioConfig) -> Result<GssmWindow> {
    cfg.validate()?;
    let p = &cfg.priors;
    let (alpha, beta) = linearize_range(p.x, p.h)?;
    let continuous = PartitionedContinuousSystem::new(
        dmatrix![0.0],
        dmatrix![0.0, 1.0],
        DMatrix::zeros(1, 0),
        dmatrix![alpha],
        dmatrix![beta, 0.0],
        dmatrix![cfg.process_noise.x],
        dmatrix![cfg.range_variance],
    )?;
    let qd = dmatrix![cfg.process_noise.x.max(MIN_FACTOR_VARIANCE)];
    let system = discretize_partitioned(&continuous, cfg.dt, qd)?;
    let observation = Observation::Nonlinear(Arc::new(RangeModel::new(3, 2, 0, cfg.range_variance)?));
    let priors = GssmPriors {
        constant_mean: DVector::from_vec(vec![p.h, p.xdot]),
        constant_cov: DMatrix::from_diagonal(&DVector::from_vec(vec![p.p_h, p.p_xdot])),
        dynamic_mean: DVector::from_element(1, p.x),
        dynamic_cov: dmatrix![p.p_x],
    };
    GssmWindow::new(
        system,
        observation,
        priors,
        cfg.w,
        cfg.prior_mode,
        GaussNewtonOptions::default(),
    )
}

/// Standard sliding-window smoother over the unified state `[x, ẋ, h]`.
pub fn radar_fgo_config(cfg: &ScenarioConfig) -> Result<SlidingWindowSmoother> {
    cfg.validate()?;
    let q = &cfg.process_noise;
    let qd = DMatrix::from_diagonal(&DVector::from_vec(vec![
        q.x.max(MIN_FACTOR_VARIANCE),
        q.xdot.max(MIN_FACTOR_VARIANCE),
        MIN_FACTOR_VARIANCE,
    ]));
    let system = discretize_linear(&unified_continuous(cfg)?, cfg.dt, qd)?;
    let observation = Observation::Nonlinear(Arc::new(RangeModel::new(3, 0, 2, cfg.range_variance)?));
    SlidingWindowSmoother::new(
        system,
        observation,
        unified_prior(cfg),
        cfg.w,
        cfg.prior_mode,
        GaussNewtonOptions::default(),
    )
}

pub fn run_gssm(cfg: &ScenarioConfig, measurements: &RangeMeasurements) -> Result<Vec<GssmEstimate>> {
    let mut gssm = radar_gssm_config(cfg)?;
    let u = DVector::zeros(0);
    measurements
        .range
        .iter()
        .map(|&rho| gssm.step(&DVector::from_element(1, rho), &u))
        .collect()
}

pub fn run_fgo(cfg: &ScenarioConfig, measurements: &RangeMeasurements) -> Result<Vec<WindowEstimate>> {
    let mut fgo = radar_fgo_config(cfg)?;
    let u = DVector::zeros(0);
    measurements
        .range
        .iter()
        .map(|&rho| fgo.step(&DVector::from_element(1, rho), &u))
        .collect()
}

/// Run one estimator over shared truth and measurements; estimates are
/// ordered `[x, ẋ, h]`.
pub fn run_estimator(
    kind: EstimatorKind,
    cfg: &ScenarioConfig,
    truth: &RadarTruth,
    measurements: &RangeMeasurements,
) -> Result<EstimateSeries> {
    if truth.len() != measurements.range.len() {
        return Err(Error::DimensionMismatch {
            context: "truth and measurement lengths",
            expected: truth.len(),
            found: measurements.range.len(),
        });
    }
    let estimates: Vec<([f64; 3], [f64; 3])> = match kind {
        EstimatorKind::Ekf => radar_ekf_config(cfg)?
            .run(measurements)?
            .iter()
            .map(|s| {
                let (m, p) = (s.mean(), s.covariance());
                ([m[0], m[1], m[2]], [p[(0, 0)], p[(1, 1)], p[(2, 2)]])
            })
            .collect(),
        EstimatorKind::Gssm => run_gssm(cfg, measurements)?
            .iter()
            .map(|e| {
                let (x, b) = (e.dynamic.mean(), e.constant.mean());
                let (vx, vb) = (e.dynamic.variances(), e.constant.variances());
                ([x[0], b[1], b[0]], [vx[0], vb[1], vb[0]])
            })
            .collect(),
        EstimatorKind::Fgo => run_fgo(cfg, measurements)?
            .iter()
            .map(|e| {
                let (m, v) = (e.newest.mean(), e.newest.variances());
                ([m[0], m[1], m[2]], [v[0], v[1], v[2]])
            })
            .collect(),
    };
    let rows = estimates
        .into_iter()
        .enumerate()
        .map(|(k, (est, var))| {
            EstimateRow::new(
                k + 1,
                truth.t[k],
                [truth.x[k], truth.v[k], truth.h[k]],
                est,
                var,
            )
        })
        .collect();
    Ok(EstimateSeries {
        estimator: kind.name().to_string(),
        rows,
    })
}
