use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{ensure_pd, MeasurementModel};

/// Direction cosines `(α, β) = (x/ρ, h/ρ)` of the line of sight, which are
/// also the range Jacobian with respect to `(x, h)`.
pub fn linearize_range(x: f64, h: f64) -> Result<(f64, f64)> {
    let rho = x.hypot(h);
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Singularity(format!(
            "range is {rho} at x = {x}, h = {h}"
        )));
    }
    Ok((x / rho, h / rho))
}

/// Scalar slant-range measurement reading two components of a state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeModel {
    dim: usize,
    x_index: usize,
    h_index: usize,
    noise: DMatrix<f64>,
}

impl RangeModel {
    pub fn new(dim: usize, x_index: usize, h_index: usize, variance: f64) -> Result<Self> {
        if x_index >= dim || h_index >= dim || x_index == h_index {
            return Err(Error::InvalidArgument(format!(
                "range model indices ({x_index}, {h_index}) invalid for a {dim}-state"
            )));
        }
        let noise = DMatrix::from_element(1, 1, variance);
        ensure_pd(&noise, "range variance")?;
        Ok(Self {
            dim,
            x_index,
            h_index,
            noise,
        })
    }
}

impl MeasurementModel for RangeModel {
    fn state_dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, x[self.x_index].hypot(x[self.h_index]))
    }

    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (alpha, beta) = linearize_range(x[self.x_index], x[self.h_index])?;
        let mut jac = DMatrix::zeros(1, self.dim);
        jac[(0, self.x_index)] = alpha;
        jac[(0, self.h_index)] = beta;
        Ok(jac)
    }

    fn noise(&self) -> &DMatrix<f64> {
        &self.noise
    }
}
