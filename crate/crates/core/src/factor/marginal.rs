use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use super::VarId;
use crate::error::{Error, Result};
use crate::model::{symmetrize, BlockSpec, GaussianBelief};

/// How the prior produced by marginalization is carried into the next window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PriorMode {
    /// One prior per variable block; cross-covariances between blocks dropped.
    #[default]
    BlockDiagonal,
    /// One dense prior over all neighbouring blocks.
    ExactJoint,
}

impl FromStr for PriorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block-diagonal" => Ok(PriorMode::BlockDiagonal),
            "exact-joint" => Ok(PriorMode::ExactJoint),
            other => Err(Error::InvalidArgument(format!("unknown prior mode `{other}`"))),
        }
    }
}

/// Marginal over `keep` of the Gaussian with information `info` and mean `mean`
/// laid out as `layout`; every other block is eliminated by Schur complement
/// `I_kk − I_kd I_dd⁻¹ I_dk`.
pub fn marginalize(
    info: &DMatrix<f64>,
    mean: &DVector<f64>,
    layout: &[BlockSpec],
    keep: &[VarId],
) -> Result<GaussianBelief> {
    let d = mean.len();
    if info.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            context: "information matrix side",
            expected: d,
            found: info.nrows(),
        });
    }
    if let Some(&missing) = keep.iter().find(|id| !layout.iter().any(|b| b.id == **id)) {
        return Err(Error::UnknownVariable(missing));
    }

    let mut keep_idx = Vec::new();
    let mut drop_idx = Vec::new();
    let mut kept_blocks = Vec::new();
    let mut offset = 0;
    for block in layout {
        let range = offset..offset + block.dim;
        if keep.contains(&block.id) {
            keep_idx.extend(range);
            kept_blocks.push(*block);
        } else {
            drop_idx.extend(range);
        }
        offset += block.dim;
    }
    if offset != d {
        return Err(Error::DimensionMismatch {
            context: "marginalization layout",
            expected: d,
            found: offset,
        });
    }

    let select = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| info[(rows[i], cols[j])])
    };
    let mut schur = select(&keep_idx, &keep_idx);
    if !drop_idx.is_empty() {
        let i_dd = select(&drop_idx, &drop_idx);
        let i_dk = select(&drop_idx, &keep_idx);
        let chol = i_dd.cholesky().ok_or(Error::SingularMarginal)?;
        schur -= i_dk.transpose() * chol.solve(&i_dk);
    }
    symmetrize(&mut schur);

    let k = keep_idx.len();
    let mut cov = if k == 0 {
        DMatrix::zeros(0, 0)
    } else {
        schur
            .cholesky()
            .ok_or(Error::NotPositiveDefinite("marginal information"))?
            .inverse()
    };
    symmetrize(&mut cov);
    let kept_mean = DVector::from_iterator(k, keep_idx.iter().map(|&i| mean[i]));
    GaussianBelief::new(kept_mean, cov, kept_blocks)
}
