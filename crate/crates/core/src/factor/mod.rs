//! Gaussian factors and sliding-window weighted least squares.
//!
//! A [`FactorWindow`] holds an ordered set of variable blocks and a list of
//! [`Factor`]s. Each factor contributes the row block
//! `Σ_j A_j x_j = b` with noise covariance `P`, so stacking all factors
//! yields the window system `A_w X_w = b_w`, `P_w = blkdiag(P_i)`.

mod marginal;
mod smoother;
mod solve;
mod window;

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{ensure_len, ensure_pd, GaussianBelief, SharedMeasurementModel};

pub use marginal::{marginalize, PriorMode};
pub use smoother::{SlidingWindowSmoother, WindowEstimate};
pub use solve::{solve_normal_equations, GaussNewtonOptions, SolveResult};
pub use window::{FactorWindow, LinearizedSystem};

/// Identifier of a variable block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Prior,
    Between,
    Measurement,
    RelinearizableMeasurement,
}

#[derive(Debug, Clone)]
pub struct Factor {
    kind: FactorKind,
    vars: Vec<VarId>,
    dims: Vec<usize>,
    // Empty for relinearizable factors; their blocks come from the model Jacobian.
    coefficients: Vec<DMatrix<f64>>,
    rhs: DVector<f64>,
    noise: DMatrix<f64>,
    whitener: DMatrix<f64>,
    model: Option<SharedMeasurementModel>,
}

fn whitener(noise: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_pd(noise, "factor noise")?;
    let chol = noise
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("factor noise"))?;
    let n = noise.nrows();
    chol.l()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::NotPositiveDefinite("factor noise"))
}

impl Factor {
    /// Linear factor `Σ_j A_j x_j = rhs` with noise covariance `noise`.
    pub fn linear(
        kind: FactorKind,
        terms: Vec<(VarId, DMatrix<f64>)>,
        rhs: DVector<f64>,
        noise: DMatrix<f64>,
    ) -> Result<Self> {
        if kind == FactorKind::RelinearizableMeasurement {
            return Err(Error::InvalidArgument(
                "relinearizable factors need a measurement model".into(),
            ));
        }
        if terms.is_empty() {
            return Err(Error::InvalidArgument("factor references no variables".into()));
        }
        let rows = rhs.len();
        if noise.nrows() != rows || noise.ncols() != rows {
            return Err(Error::DimensionMismatch {
                context: "factor noise",
                expected: rows,
                found: noise.nrows(),
            });
        }
        for (_, a) in &terms {
            if a.nrows() != rows {
                return Err(Error::DimensionMismatch {
                    context: "factor coefficient rows",
                    expected: rows,
                    found: a.nrows(),
                });
            }
        }
        let whitener = whitener(&noise)?;
        let (vars, coefficients): (Vec<_>, Vec<_>) = terms.into_iter().unzip();
        let dims = coefficients.iter().map(|a| a.ncols()).collect();
        Ok(Self {
            kind,
            vars,
            dims,
            coefficients,
            rhs,
            noise,
            whitener,
            model: None,
        })
    }

    /// `x = mean` with covariance `cov`.
    pub fn prior(id: VarId, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        Self::linear(FactorKind::Prior, vec![(id, DMatrix::identity(n, n))], mean, cov)
    }

    /// A dense prior over every block of `belief`, cross-covariances included.
    pub fn from_belief(belief: &GaussianBelief) -> Result<Self> {
        let d = belief.dim();
        let mut offset = 0;
        let mut terms = Vec::with_capacity(belief.blocks().len());
        for block in belief.blocks() {
            let mut a = DMatrix::zeros(d, block.dim);
            a.view_mut((offset, 0), (block.dim, block.dim))
                .fill_with_identity();
            terms.push((block.id, a));
            offset += block.dim;
        }
        Self::linear(
            FactorKind::Prior,
            terms,
            belief.mean().clone(),
            belief.covariance().clone(),
        )
    }

    /// Measurement `y = h([x_1; …; x_k]) + r`, relinearized on every assembly.
    pub fn relinearizable(
        vars: Vec<(VarId, usize)>,
        model: SharedMeasurementModel,
        y: DVector<f64>,
    ) -> Result<Self> {
        let total: usize = vars.iter().map(|(_, d)| d).sum();
        if total != model.state_dim() {
            return Err(Error::DimensionMismatch {
                context: "relinearizable factor state",
                expected: model.state_dim(),
                found: total,
            });
        }
        ensure_len(&y, model.measurement_dim(), "measurement")?;
        let noise = model.noise().clone();
        let whitener = whitener(&noise)?;
        let (vars, dims) = vars.into_iter().unzip();
        Ok(Self {
            kind: FactorKind::RelinearizableMeasurement,
            vars,
            dims,
            coefficients: Vec::new(),
            rhs: y,
            noise,
            whitener,
            model: Some(model),
        })
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }
    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
    pub fn rows(&self) -> usize {
        self.rhs.len()
    }
    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }
    pub fn noise(&self) -> &DMatrix<f64> {
        &self.noise
    }
    pub fn is_linear(&self) -> bool {
        self.model.is_none()
    }
    pub fn touches(&self, id: VarId) -> bool {
        self.vars.contains(&id)
    }

    /// Coefficient blocks and right-hand side at `local`, the stacked values
    /// of the referenced variables.
    ///
    /// A relinearized measurement becomes `J x = y - h(x₀) + J x₀`, so the
    /// solution of the assembled system is an absolute state, not an increment.
    pub fn linearize(&self, local: &DVector<f64>) -> Result<(Vec<DMatrix<f64>>, DVector<f64>)> {
        match &self.model {
            None => Ok((self.coefficients.clone(), self.rhs.clone())),
            Some(model) => {
                let jac = model.jacobian(local)?;
                let rhs = &self.rhs - model.predict(local) + &jac * local;
                let mut blocks = Vec::with_capacity(self.dims.len());
                let mut col = 0;
                for &d in &self.dims {
                    blocks.push(jac.columns(col, d).into_owned());
                    col += d;
                }
                Ok((blocks, rhs))
            }
        }
    }

    /// Unwhitened residual `rhs - Σ A_j x_j`, or `y - h(x)` for relinearizable factors.
    pub fn residual(&self, local: &DVector<f64>) -> DVector<f64> {
        match &self.model {
            None => {
                let mut r = self.rhs.clone();
                let mut col = 0;
                for (a, &d) in self.coefficients.iter().zip(&self.dims) {
                    r -= a * local.rows(col, d);
                    col += d;
                }
                r
            }
            Some(model) => &self.rhs - model.predict(local),
        }
    }

    /// `‖r‖²` in the metric of the inverse noise covariance.
    /// `L⁻¹` for the noise Cholesky factor `L`.
    pub(crate) fn whitener(&self) -> &DMatrix<f64> {
        &self.whitener
    }

    pub fn weighted_error(&self, local: &DVector<f64>) -> f64 {
        (&self.whitener * self.residual(local)).norm_squared()
    }
}

/// How a window turns a measurement into a factor.
#[derive(Debug, Clone)]
pub enum Observation {
    /// `y = C x + r` with `C` split column-wise over the referenced blocks.
    Linear { c: DMatrix<f64>, r: DMatrix<f64> },
    /// `y = h(x) + r`, relinearized every Gauss-Newton iteration.
    Nonlinear(SharedMeasurementModel),
}

impl Observation {
    pub fn state_dim(&self) -> usize {
        match self {
            Observation::Linear { c, .. } => c.ncols(),
            Observation::Nonlinear(model) => model.state_dim(),
        }
    }

    pub fn measurement_dim(&self) -> usize {
        match self {
            Observation::Linear { c, .. } => c.nrows(),
            Observation::Nonlinear(model) => model.measurement_dim(),
        }
    }

    pub fn factor(&self, vars: &[(VarId, usize)], y: DVector<f64>) -> Result<Factor> {
        match self {
            Observation::Linear { c, r } => {
                let total: usize = vars.iter().map(|(_, d)| d).sum();
                if total != c.ncols() {
                    return Err(Error::DimensionMismatch {
                        context: "measurement matrix columns",
                        expected: c.ncols(),
                        found: total,
                    });
                }
                let mut col = 0;
                let terms = vars
                    .iter()
                    .map(|&(id, d)| {
                        let block = c.columns(col, d).into_owned();
                        col += d;
                        (id, block)
                    })
                    .collect();
                Factor::linear(FactorKind::Measurement, terms, y, r.clone())
            }
            Observation::Nonlinear(model) => {
                Factor::relinearizable(vars.to_vec(), model.clone(), y)
            }
        }
    }
}
