use std::fmt;

use nalgebra::{DMatrix, DVector};

use super::window::{GssmPriors, GssmWindow};
use crate::error::{Error, Result};
use crate::factor::{PriorMode, SlidingWindowSmoother};
use crate::model::{DiscreteLinearSystem, PartitionedDiscreteSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub rows: usize,
    pub cols: usize,
    pub rhs: usize,
    pub unknowns: usize,
}

/// Window sizes for one estimator: the closed-form table values, which
/// leave out the prior rows, next to the shapes actually assembled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionReport {
    pub estimator: &'static str,
    pub table: Dims,
    pub assembled: Dims,
}

impl fmt::Display for DimensionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = &self.table;
        let a = &self.assembled;
        write!(
            f,
            "{:<22} table: A_w {}x{}, b_w {}, X_w {} | assembled: A_w {}x{}, b_w {}, X_w {}",
            self.estimator, t.rows, t.cols, t.rhs, t.unknowns, a.rows, a.cols, a.rhs, a.unknowns
        )
    }
}

fn shape_of(a: &DMatrix<f64>, b: &DVector<f64>) -> Dims {
    Dims {
        rows: a.nrows(),
        cols: a.ncols(),
        rhs: b.len(),
        unknowns: a.ncols(),
    }
}

/// Sizes of the unified sliding-window system and the GSSM window for a
/// model with `n_b` constant states, `n_c` dynamic states, `m` measurements
/// and window length `w`. Returns `[unified, gssm]`.
pub fn dimension_report(n_b: usize, n_c: usize, m: usize, w: usize) -> Result<[DimensionReport; 2]> {
    if n_c == 0 || m == 0 || w == 0 {
        return Err(Error::InvalidArgument(
            "n_c, m and w must all be positive".into(),
        ));
    }
    let n = n_b + n_c;

    let unified_table = Dims {
        rows: (n + m) * w,
        cols: n * (w + 1),
        rhs: (n + m) * w,
        unknowns: n * (w + 1),
    };
    let gssm_table = Dims {
        rows: n_b + (n_c + m) * w,
        cols: n_b + n_c * (w + 1),
        rhs: n_b + (n_c + m) * w,
        unknowns: n_b + n_c * (w + 1),
    };

    let unified_sys = DiscreteLinearSystem::new(
        DMatrix::identity(n, n),
        DMatrix::zeros(n, 0),
        DMatrix::identity(m, n),
        DMatrix::identity(n, n),
        DMatrix::identity(m, m),
        1.0,
    )?;
    let mut unified = SlidingWindowSmoother::linear(
        unified_sys,
        (DVector::zeros(n), DMatrix::identity(n, n)),
        w,
        PriorMode::default(),
    )?;
    let gssm_sys = PartitionedDiscreteSystem::new(
        DMatrix::identity(n_c, n_c),
        DMatrix::identity(n_c, n_b),
        DMatrix::zeros(n_c, 0),
        DMatrix::identity(m, n_c),
        DMatrix::identity(m, n_b),
        DMatrix::identity(n_c, n_c),
        DMatrix::identity(m, m),
        1.0,
    )?;
    let observation = GssmWindow::linear_observation(&gssm_sys);
    let priors = GssmPriors {
        constant_mean: DVector::zeros(n_b),
        constant_cov: DMatrix::identity(n_b, n_b),
        dynamic_mean: DVector::zeros(n_c),
        dynamic_cov: DMatrix::identity(n_c, n_c),
    };
    let ys = vec![DVector::zeros(m); w];
    let us = vec![DVector::zeros(0); w];
    for (y, u) in ys.iter().zip(&us) {
        unified.append(y, u)?;
    }
    let gssm = GssmWindow::build(gssm_sys, observation, priors, &ys, &us, w)?;

    let u = unified.window().assemble()?;
    let g = gssm.assemble()?;
    Ok([
        DimensionReport {
            estimator: "sliding-window KF",
            table: unified_table,
            assembled: shape_of(&u.a, &u.b),
        },
        DimensionReport {
            estimator: "GSSM",
            table: gssm_table,
            assembled: shape_of(&g.a, &g.b),
        },
    ])
}
