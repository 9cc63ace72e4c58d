//! Linear system models, their first-order discretization, and the Gaussian
//! belief type shared by every estimator.
//!
//! Two discretizations are provided. [`discretize_linear`] produces the usual
//! unified time-series model `x(k+1) = F x(k) + B u(k) + q(k)` with
//! `F = I + A T`. [`discretize_partitioned`] splits the state into a
//! time-varying block `x_c` and a constant block `x_b`; only `x_c` is
//! propagated, and `x_b` enters each transition through `F_b = A_b T`.
//!
//! Discrete process noise is always supplied by the caller.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::factor::VarId;

const SYMMETRY_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-10;

/// Replace `m` with `(m + mᵀ) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub(crate) fn ensure_shape(
    m: &DMatrix<f64>,
    rows: usize,
    cols: usize,
    context: &'static str,
) -> Result<()> {
    if m.nrows() != rows {
        return Err(Error::DimensionMismatch {
            context,
            expected: rows,
            found: m.nrows(),
        });
    }
    if m.ncols() != cols {
        return Err(Error::DimensionMismatch {
            context,
            expected: cols,
            found: m.ncols(),
        });
    }
    Ok(())
}

pub(crate) fn ensure_len(v: &DVector<f64>, len: usize, context: &'static str) -> Result<()> {
    if v.len() != len {
        return Err(Error::DimensionMismatch {
            context,
            expected: len,
            found: v.len(),
        });
    }
    Ok(())
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(1.0);
    (m - m.transpose()).amax() <= SYMMETRY_TOL * scale
}

/// Validate a covariance as symmetric positive semi-definite.
pub(crate) fn ensure_psd(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if !m.is_square() || !is_symmetric(m) {
        return Err(Error::NotPositiveSemiDefinite(what));
    }
    if m.nrows() == 0 {
        return Ok(());
    }
    let scale = m.amax().max(1.0);
    let min_eig = m.clone().symmetric_eigenvalues().min();
    if min_eig < -PSD_TOL * scale {
        return Err(Error::NotPositiveSemiDefinite(what));
    }
    Ok(())
}

/// Validate a covariance as symmetric positive definite.
pub(crate) fn ensure_pd(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if !m.is_square() || !is_symmetric(m) || m.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite(what));
    }
    Ok(())
}

/// Continuous-time model `ẋ = A x + B u + q`, `y = C x + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousLinearSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl ContinuousLinearSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        ensure_shape(&a, n, n, "system matrix A")?;
        ensure_shape(&b, n, b.ncols(), "input matrix B")?;
        let m = c.nrows();
        ensure_shape(&c, m, n, "measurement matrix C")?;
        ensure_shape(&q, n, n, "process noise Q")?;
        ensure_shape(&r, m, m, "measurement noise R")?;
        ensure_psd(&q, "process noise Q")?;
        ensure_pd(&r, "measurement noise R")?;
        Ok(Self { a, b, c, q, r })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }
    pub fn measurement_dim(&self) -> usize {
        self.c.nrows()
    }
    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
}

/// Discrete-time model `x(k+1) = F x(k) + B u(k) + q(k)`, `y(k+1) = C x(k+1) + r(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLinearSystem {
    f: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    dt: f64,
}

impl DiscreteLinearSystem {
    pub fn new(
        f: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveInterval(dt));
        }
        let n = f.nrows();
        ensure_shape(&f, n, n, "prediction matrix F")?;
        ensure_shape(&b, n, b.ncols(), "input matrix B")?;
        let m = c.nrows();
        ensure_shape(&c, m, n, "measurement matrix C")?;
        ensure_shape(&q, n, n, "process noise Q")?;
        ensure_shape(&r, m, m, "measurement noise R")?;
        ensure_psd(&q, "process noise Q")?;
        ensure_pd(&r, "measurement noise R")?;
        Ok(Self { f, b, c, q, r, dt })
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn state_dim(&self) -> usize {
        self.f.nrows()
    }
    pub fn measurement_dim(&self) -> usize {
        self.c.nrows()
    }
    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
}

/// Continuous model whose state splits into a dynamic block `x_c` and a
/// constant block `x_b`:
///
/// ```text
/// d/dt [x_c; x_b] = [A_c A_b; 0 0] [x_c; x_b] + [B; 0] u + [q; 0]
/// y               = [C_c C_b] [x_c; x_b] + r
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedContinuousSystem {
    a_c: DMatrix<f64>,
    a_b: DMatrix<f64>,
    b: DMatrix<f64>,
    c_c: DMatrix<f64>,
    c_b: DMatrix<f64>,
    q_c: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl PartitionedContinuousSystem {
    pub fn new(
        a_c: DMatrix<f64>,
        a_b: DMatrix<f64>,
        b: DMatrix<f64>,
        c_c: DMatrix<f64>,
        c_b: DMatrix<f64>,
        q_c: DMatrix<f64>,
        r: DMatrix<f64>,
    ) -> Result<Self> {
        let n_c = a_c.nrows();
        if n_c == 0 {
            return Err(Error::InvalidArgument(
                "the dynamic block x_c must be non-empty".into(),
            ));
        }
        ensure_shape(&a_c, n_c, n_c, "A_c")?;
        let n_b = a_b.ncols();
        ensure_shape(&a_b, n_c, n_b, "A_b")?;
        ensure_shape(&b, n_c, b.ncols(), "input matrix B")?;
        let m = c_c.nrows();
        ensure_shape(&c_c, m, n_c, "C_c")?;
        ensure_shape(&c_b, m, n_b, "C_b")?;
        ensure_shape(&q_c, n_c, n_c, "process noise Q_c")?;
        ensure_shape(&r, m, m, "measurement noise R")?;
        ensure_psd(&q_c, "process noise Q_c")?;
        ensure_pd(&r, "measurement noise R")?;
        Ok(Self {
            a_c,
            a_b,
            b,
            c_c,
            c_b,
            q_c,
            r,
        })
    }

    pub fn a_c(&self) -> &DMatrix<f64> {
        &self.a_c
    }
    pub fn a_b(&self) -> &DMatrix<f64> {
        &self.a_b
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c_c(&self) -> &DMatrix<f64> {
        &self.c_c
    }
    pub fn c_b(&self) -> &DMatrix<f64> {
        &self.c_b
    }
    pub fn q_c(&self) -> &DMatrix<f64> {
        &self.q_c
    }
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }
    pub fn dynamic_dim(&self) -> usize {
        self.a_c.nrows()
    }
    pub fn constant_dim(&self) -> usize {
        self.a_b.ncols()
    }
    pub fn state_dim(&self) -> usize {
        self.dynamic_dim() + self.constant_dim()
    }
    pub fn measurement_dim(&self) -> usize {
        self.c_c.nrows()
    }

    /// The same model written as one unified state `[x_c; x_b]`, with zero
    /// rows for the constant block in `A`, `B` and `Q`.
    pub fn to_unified(&self) -> ContinuousLinearSystem {
        let (n_c, n_b) = (self.dynamic_dim(), self.constant_dim());
        let n = n_c + n_b;
        let mut a = DMatrix::zeros(n, n);
        a.view_mut((0, 0), (n_c, n_c)).copy_from(&self.a_c);
        a.view_mut((0, n_c), (n_c, n_b)).copy_from(&self.a_b);
        let mut b = DMatrix::zeros(n, self.b.ncols());
        b.view_mut((0, 0), (n_c, self.b.ncols())).copy_from(&self.b);
        let m = self.measurement_dim();
        let mut c = DMatrix::zeros(m, n);
        c.view_mut((0, 0), (m, n_c)).copy_from(&self.c_c);
        c.view_mut((0, n_c), (m, n_b)).copy_from(&self.c_b);
        let mut q = DMatrix::zeros(n, n);
        q.view_mut((0, 0), (n_c, n_c)).copy_from(&self.q_c);
        ContinuousLinearSystem {
            a,
            b,
            c,
            q,
            r: self.r.clone(),
        }
    }
}

/// Discrete partitioned model
/// `x_c(k+1) = F_c x_c(k) + F_b x_b + B u(k) + q(k)`,
/// `y(k+1) = C_c x_c(k+1) + C_b x_b + r(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedDiscreteSystem {
    f_c: DMatrix<f64>,
    f_b: DMatrix<f64>,
    b: DMatrix<f64>,
    c_c: DMatrix<f64>,
    c_b: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    dt: f64,
}

impl PartitionedDiscreteSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        f_c: DMatrix<f64>,
        f_b: DMatrix<f64>,
        b: DMatrix<f64>,
        c_c: DMatrix<f64>,
        c_b: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveInterval(dt));
        }
        let n_c = f_c.nrows();
        if n_c == 0 {
            return Err(Error::InvalidArgument(
                "the dynamic block x_c must be non-empty".into(),
            ));
        }
        ensure_shape(&f_c, n_c, n_c, "F_c")?;
        let n_b = f_b.ncols();
        ensure_shape(&f_b, n_c, n_b, "F_b")?;
        ensure_shape(&b, n_c, b.ncols(), "input matrix B")?;
        let m = c_c.nrows();
        ensure_shape(&c_c, m, n_c, "C_c")?;
        ensure_shape(&c_b, m, n_b, "C_b")?;
        ensure_shape(&q, n_c, n_c, "process noise Q")?;
        ensure_shape(&r, m, m, "measurement noise R")?;
        ensure_psd(&q, "process noise Q")?;
        ensure_pd(&r, "measurement noise R")?;
        Ok(Self {
            f_c,
            f_b,
            b,
            c_c,
            c_b,
            q,
            r,
            dt,
        })
    }

    pub fn f_c(&self) -> &DMatrix<f64> {
        &self.f_c
    }
    pub fn f_b(&self) -> &DMatrix<f64> {
        &self.f_b
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c_c(&self) -> &DMatrix<f64> {
        &self.c_c
    }
    pub fn c_b(&self) -> &DMatrix<f64> {
        &self.c_b
    }
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn dynamic_dim(&self) -> usize {
        self.f_c.nrows()
    }
    pub fn constant_dim(&self) -> usize {
        self.f_b.ncols()
    }
    pub fn measurement_dim(&self) -> usize {
        self.c_c.nrows()
    }
    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
}

/// Euler discretization `F = I + A T`, `B_k = B T`.
///
/// `qd` is the discrete process-noise covariance and is taken as given.
pub fn discretize_linear(
    sys: &ContinuousLinearSystem,
    dt: f64,
    qd: DMatrix<f64>,
) -> Result<DiscreteLinearSystem> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveInterval(dt));
    }
    let n = sys.state_dim();
    let f = DMatrix::identity(n, n) + &sys.a * dt;
    DiscreteLinearSystem::new(f, &sys.b * dt, sys.c.clone(), qd, sys.r.clone(), dt)
}

/// Distributed discretization: `F_c = I + A_c T`, `F_b = A_b T`, `B_k = B T`.
///
/// The constant block carries no transition of its own; its prior lives in
/// a [`GaussianBelief`] held by the estimator.
pub fn discretize_partitioned(
    sys: &PartitionedContinuousSystem,
    dt: f64,
    qd: DMatrix<f64>,
) -> Result<PartitionedDiscreteSystem> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveInterval(dt));
    }
    let n_c = sys.dynamic_dim();
    let f_c = DMatrix::identity(n_c, n_c) + &sys.a_c * dt;
    let f_b = &sys.a_b * dt;
    PartitionedDiscreteSystem::new(
        f_c,
        f_b,
        &sys.b * dt,
        sys.c_c.clone(),
        sys.c_b.clone(),
        qd,
        sys.r.clone(),
        dt,
    )
}

/// A labelled variable block inside a stacked state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockSpec {
    pub id: VarId,
    pub dim: usize,
}

impl BlockSpec {
    pub fn new(id: VarId, dim: usize) -> Self {
        Self { id, dim }
    }
}

/// Mean and covariance over an ordered list of variable blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    blocks: Vec<BlockSpec>,
}

impl GaussianBelief {
    pub fn new(
        mean: DVector<f64>,
        mut covariance: DMatrix<f64>,
        blocks: Vec<BlockSpec>,
    ) -> Result<Self> {
        let d = mean.len();
        ensure_shape(&covariance, d, d, "belief covariance")?;
        let total: usize = blocks.iter().map(|b| b.dim).sum();
        if total != d {
            return Err(Error::DimensionMismatch {
                context: "belief block layout",
                expected: d,
                found: total,
            });
        }
        ensure_psd(&covariance, "belief covariance")?;
        symmetrize(&mut covariance);
        Ok(Self {
            mean,
            covariance,
            blocks,
        })
    }

    /// Belief over a single block.
    pub fn single(id: VarId, mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        Self::new(mean, covariance, vec![BlockSpec::new(id, dim)])
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }
    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn variances(&self) -> DVector<f64> {
        self.covariance.diagonal()
    }

    /// Offset of block `id` in the stacked vector.
    pub fn offset_of(&self, id: VarId) -> Option<(usize, usize)> {
        let mut offset = 0;
        for b in &self.blocks {
            if b.id == id {
                return Some((offset, b.dim));
            }
            offset += b.dim;
        }
        None
    }

    /// Marginal belief of one block (a sub-block read, no conditioning).
    pub fn block(&self, id: VarId) -> Result<GaussianBelief> {
        let (offset, dim) = self.offset_of(id).ok_or(Error::UnknownVariable(id))?;
        Ok(GaussianBelief {
            mean: self.mean.rows(offset, dim).into_owned(),
            covariance: self.covariance.view((offset, offset), (dim, dim)).into_owned(),
            blocks: vec![BlockSpec::new(id, dim)],
        })
    }

    /// Per-block marginals with all cross-covariances discarded.
    pub fn split_blocks(&self) -> Vec<GaussianBelief> {
        self.blocks
            .iter()
            .map(|b| self.block(b.id).expect("block taken from own layout"))
            .collect()
    }
}

/// Nonlinear measurement `y = h(x) + r`, `r ~ N(0, R)`.
pub trait MeasurementModel: std::fmt::Debug + Send + Sync {
    fn state_dim(&self) -> usize;

    fn measurement_dim(&self) -> usize {
        self.noise().nrows()
    }

    /// Predicted measurement `h(x)`.
    fn predict(&self, x: &DVector<f64>) -> DVector<f64>;

    /// `∂h/∂x` evaluated at `x`; fails where `h` is not differentiable.
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;

    fn noise(&self) -> &DMatrix<f64>;
}

/// `h(x) = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMeasurement {
    c: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl LinearMeasurement {
    pub fn new(c: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        ensure_shape(&r, c.nrows(), c.nrows(), "measurement noise R")?;
        ensure_pd(&r, "measurement noise R")?;
        Ok(Self { c, r })
    }
}

impl MeasurementModel for LinearMeasurement {
    fn state_dim(&self) -> usize {
        self.c.ncols()
    }
    fn predict(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c * x
    }
    fn jacobian(&self, _x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.c.clone())
    }
    fn noise(&self) -> &DMatrix<f64> {
        &self.r
    }
}

pub type SharedMeasurementModel = Arc<dyn MeasurementModel>;

/// Central-difference Jacobian of `model.predict` with step `1e-6·max(1, |x_i|)`.
pub fn finite_difference_jacobian(model: &dyn MeasurementModel, x: &DVector<f64>) -> DMatrix<f64> {
    let m = model.measurement_dim();
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    for i in 0..n {
        let step = 1e-6 * x[i].abs().max(1.0);
        let mut plus = x.clone();
        plus[i] += step;
        let mut minus = x.clone();
        minus[i] -= step;
        let diff = (model.predict(&plus) - model.predict(&minus)) / (2.0 * step);
        jac.set_column(i, &diff);
    }
    jac
}
