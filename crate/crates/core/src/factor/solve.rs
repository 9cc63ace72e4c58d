use nalgebra::{DMatrix, DVector};

use super::window::FactorWindow;
use crate::error::{Error, Result};
use crate::model::symmetrize;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// Stacked window estimate.
    pub estimate: DVector<f64>,
    /// `A_wᵀ P_w⁻¹ A_w` at the estimate.
    pub information: DMatrix<f64>,
    /// Weighted sum of squared residuals at the estimate.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the starting point and after every accepted iteration.
    pub objective_history: Vec<f64>,
}

impl SolveResult {
    /// Covariance of the estimate, `information⁻¹`.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let mut cov = self
            .information
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite("window information"))?
            .inverse();
        symmetrize(&mut cov);
        Ok(cov)
    }
}

/// Minimize `‖A x − b‖²` in the `P⁻¹` metric.
///
/// The rows are whitened with the Cholesky factor of `P` and the whitened
/// system is solved by Householder QR; the singular values of `R` give the
/// rank check.
pub fn solve_normal_equations(
    a: &DMatrix<f64>,
    p: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<SolveResult> {
    let rows = a.nrows();
    if b.len() != rows {
        return Err(Error::DimensionMismatch {
            context: "right-hand side length",
            expected: rows,
            found: b.len(),
        });
    }
    if p.shape() != (rows, rows) {
        return Err(Error::DimensionMismatch {
            context: "noise covariance side",
            expected: rows,
            found: p.nrows(),
        });
    }
    let l = p
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("window noise P_w"))?
        .unpack();
    let aw = l
        .solve_lower_triangular(a)
        .ok_or(Error::NotPositiveDefinite("window noise P_w"))?;
    let bw = l
        .solve_lower_triangular(b)
        .ok_or(Error::NotPositiveDefinite("window noise P_w"))?;

    solve_whitened(aw, bw)
}

/// Least squares on an already whitened system `‖A_w x − b_w‖²`.
pub(crate) fn solve_whitened(aw: DMatrix<f64>, mut bw: DVector<f64>) -> Result<SolveResult> {
    let (rows, cols) = aw.shape();
    if rows < cols {
        let sv = aw.singular_values();
        return Err(Error::RankDeficient {
            smallest: 0.0,
            largest: sv.max(),
        });
    }

    let qr = aw.clone().qr();
    let r = qr.r();
    let sv = r.singular_values();
    let (largest, smallest) = (sv.max(), sv.min());
    let threshold = largest * rows.max(cols) as f64 * f64::EPSILON;
    if cols > 0 && !(smallest > threshold) {
        return Err(Error::RankDeficient { smallest, largest });
    }
    qr.q_tr_mul(&mut bw);
    let estimate = r
        .solve_upper_triangular(&bw.rows(0, cols))
        .ok_or(Error::RankDeficient { smallest, largest })?;
    let mut information = r.transpose() * &r;
    symmetrize(&mut information);
    // Residual of the least-squares fit is the part of Qᵀb below R.
    let objective = bw.rows(cols, rows - cols).norm_squared();
    Ok(SolveResult {
        estimate,
        information,
        objective,
        iterations: 1,
        converged: true,
        objective_history: vec![objective],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussNewtonOptions {
    /// Stop once the accepted update has 2-norm below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Step halvings tried before an objective increase is an error.
    pub max_halvings: usize,
}

impl Default for GaussNewtonOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 20,
            max_halvings: 8,
        }
    }
}

pub(crate) fn gauss_newton(window: &FactorWindow, options: &GaussNewtonOptions) -> Result<SolveResult> {
    let mut x = window.linearization().clone();
    let mut f = window.objective_at(&x)?;
    let mut history = vec![f];

    if !window.has_relinearizable() {
        let mut solved = window.solve_at(&x)?;
        // a linear problem is solved exactly by one step
        if solved.objective <= f {
            history.push(solved.objective);
        }
        solved.objective_history = history;
        return Ok(solved);
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iterations {
        iterations += 1;
        let step = window.solve_at(&x)?.estimate - &x;
        let full_norm = step.norm();
        let mut scale = 1.0;
        let mut accepted = None;
        let mut first_trial = None;
        for _ in 0..=options.max_halvings {
            let candidate = &x + &step * scale;
            let fc = window.objective_at(&candidate)?;
            first_trial.get_or_insert(fc);
            if fc <= f {
                accepted = Some((candidate, fc));
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some((candidate, fc)) => {
                x = candidate;
                f = fc;
                history.push(f);
                if full_norm * scale < options.tolerance {
                    converged = true;
                    break;
                }
            }
            // Already at the optimum to within rounding.
            None if full_norm * scale * 2.0 < options.tolerance => {
                converged = true;
                break;
            }
            None => {
                return Err(Error::ObjectiveIncrease {
                    before: f,
                    after: first_trial.unwrap_or(f),
                })
            }
        }
    }

    let at_solution = window.solve_at(&x)?;
    Ok(SolveResult {
        estimate: x,
        information: at_solution.information,
        objective: f,
        iterations,
        converged,
        objective_history: history,
    })
}
