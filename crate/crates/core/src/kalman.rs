//! Linear Kalman filter and extended Kalman filter baselines.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::factor::VarId;
use crate::model::{
    ensure_len, ensure_shape, symmetrize, DiscreteLinearSystem, GaussianBelief, MeasurementModel,
};

/// Block label used for the single state carried by a filter.
pub const FILTER_STATE: VarId = VarId(0);

/// Covariance form used by the measurement update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum CovarianceUpdate {
    /// `P = (I - K C) P`, then symmetrized.
    #[default]
    Standard,
    /// `P = (I - K C) P (I - K C)ᵀ + K R Kᵀ`.
    Joseph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub belief: GaussianBelief,
    pub step: usize,
}

impl KalmanState {
    pub fn new(belief: GaussianBelief) -> Self {
        Self { belief, step: 0 }
    }

    pub fn mean(&self) -> &DVector<f64> {
        self.belief.mean()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        self.belief.covariance()
    }

    fn with(&self, mean: DVector<f64>, mut cov: DMatrix<f64>, step: usize) -> Result<Self> {
        symmetrize(&mut cov);
        Ok(Self {
            belief: GaussianBelief::new(mean, cov, self.belief.blocks().to_vec())?,
            step,
        })
    }
}

/// Time update: `x = F x + B u`, `P = F P Fᵀ + Q`.
pub fn predict(
    state: &KalmanState,
    sys: &DiscreteLinearSystem,
    u: &DVector<f64>,
) -> Result<KalmanState> {
    let n = sys.state_dim();
    ensure_len(state.mean(), n, "filter state")?;
    ensure_len(u, sys.input_dim(), "control input")?;
    let f = sys.f();
    let mean = f * state.mean() + sys.b() * u;
    let cov = f * state.covariance() * f.transpose() + sys.q();
    state.with(mean, cov, state.step + 1)
}

/// Measurement update with the standard covariance form.
pub fn update(
    state: &KalmanState,
    c: &DMatrix<f64>,
    r: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<KalmanState> {
    update_with(state, c, r, y, CovarianceUpdate::Standard)
}

pub fn update_with(
    state: &KalmanState,
    c: &DMatrix<f64>,
    r: &DMatrix<f64>,
    y: &DVector<f64>,
    form: CovarianceUpdate,
) -> Result<KalmanState> {
    let n = state.mean().len();
    let m = y.len();
    ensure_shape(c, m, n, "measurement matrix C")?;
    let innovation = y - c * state.mean();
    correct(state, c, r, innovation, form)
}

/// EKF update: `C` is the model Jacobian at the current mean and the
/// innovation is the nonlinear residual `y - h(x)`.
pub fn update_nonlinear(
    state: &KalmanState,
    model: &dyn MeasurementModel,
    y: &DVector<f64>,
) -> Result<KalmanState> {
    ensure_len(state.mean(), model.state_dim(), "filter state")?;
    ensure_len(y, model.measurement_dim(), "measurement")?;
    let c = model.jacobian(state.mean())?;
    let innovation = y - model.predict(state.mean());
    correct(state, &c, model.noise(), innovation, CovarianceUpdate::Standard)
}

fn correct(
    state: &KalmanState,
    c: &DMatrix<f64>,
    r: &DMatrix<f64>,
    innovation: DVector<f64>,
    form: CovarianceUpdate,
) -> Result<KalmanState> {
    let m = innovation.len();
    ensure_shape(r, m, m, "measurement noise R")?;
    let p = state.covariance();
    let pct = p * c.transpose();
    let mut s = c * &pct + r;
    symmetrize(&mut s);
    let chol = match s.clone().cholesky() {
        Some(chol) => chol,
        None => {
            let sv = s.singular_values();
            let condition = sv.max() / sv.min();
            return Err(Error::SingularInnovation { condition });
        }
    };
    // K = P Cᵀ S⁻¹, computed as (S⁻¹ C P)ᵀ since S is symmetric.
    let gain = chol.solve(&pct.transpose()).transpose();
    let mean = state.mean() + &gain * innovation;
    let n = p.nrows();
    let i_kc = DMatrix::identity(n, n) - &gain * c;
    let cov = match form {
        CovarianceUpdate::Standard => &i_kc * p,
        CovarianceUpdate::Joseph => {
            &i_kc * p * i_kc.transpose() + &gain * r * gain.transpose()
        }
    };
    state.with(mean, cov, state.step)
}

/// Alternate predict/update over paired input and measurement streams.
///
/// Returns one posterior per measurement; the input at index `k` drives the
/// transition into the state observed by measurement `k`.
pub fn run_filter(
    init: &GaussianBelief,
    sys: &DiscreteLinearSystem,
    inputs: &[DVector<f64>],
    measurements: &[DVector<f64>],
) -> Result<Vec<KalmanState>> {
    if inputs.len() != measurements.len() {
        return Err(Error::DimensionMismatch {
            context: "input and measurement stream lengths",
            expected: measurements.len(),
            found: inputs.len(),
        });
    }
    let mut state = KalmanState::new(init.clone());
    let mut out = Vec::with_capacity(measurements.len());
    for (u, y) in inputs.iter().zip(measurements) {
        state = predict(&state, sys, u)?;
        state = update(&state, sys.c(), sys.r(), y)?;
        out.push(state.clone());
    }
    Ok(out)
}
