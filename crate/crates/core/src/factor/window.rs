use nalgebra::{DMatrix, DVector};

use super::marginal::{marginalize, PriorMode};
use super::solve::{gauss_newton, solve_whitened, GaussNewtonOptions, SolveResult};
use super::{Factor, FactorKind, VarId};
use crate::error::{Error, Result};
use crate::model::{ensure_len, BlockSpec, GaussianBelief};

/// The stacked window system `A_w X_w = b_w` with noise `P_w`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedSystem {
    pub a: DMatrix<f64>,
    pub noise: DMatrix<f64>,
    pub b: DVector<f64>,
}

/// Variable blocks, the factors over them, and the current linearization point.
#[derive(Debug, Clone, Default)]
pub struct FactorWindow {
    blocks: Vec<BlockSpec>,
    factors: Vec<Factor>,
    linearization: DVector<f64>,
}

impl FactorWindow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn linearization(&self) -> &DVector<f64> {
        &self.linearization
    }

    /// Total column dimension.
    pub fn dim(&self) -> usize {
        self.linearization.len()
    }

    pub fn rows(&self) -> usize {
        self.factors.iter().map(Factor::rows).sum()
    }

    pub fn contains(&self, id: VarId) -> bool {
        self.blocks.iter().any(|b| b.id == id)
    }

    /// `(offset, dim)` of block `id`.
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

    pub fn value_of(&self, id: VarId) -> Result<DVector<f64>> {
        let (offset, dim) = self.offset_of(id).ok_or(Error::UnknownVariable(id))?;
        Ok(self.linearization.rows(offset, dim).into_owned())
    }

    pub fn add_variable(&mut self, id: VarId, initial: DVector<f64>) -> Result<()> {
        if self.contains(id) {
            return Err(Error::DuplicateVariable(id));
        }
        self.blocks.push(BlockSpec::new(id, initial.len()));
        let mut lin = std::mem::replace(&mut self.linearization, DVector::zeros(0))
            .resize_vertically(self.dim_from_blocks(), 0.0);
        let n = lin.len();
        lin.rows_mut(n - initial.len(), initial.len()).copy_from(&initial);
        self.linearization = lin;
        Ok(())
    }

    fn dim_from_blocks(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    pub fn add_factor(&mut self, factor: Factor) -> Result<()> {
        self.check_factor(&factor)?;
        self.factors.push(factor);
        Ok(())
    }

    fn check_factor(&self, factor: &Factor) -> Result<()> {
        for (&id, &dim) in factor.vars().iter().zip(factor.dims()) {
            let (_, block_dim) = self.offset_of(id).ok_or(Error::UnknownVariable(id))?;
            if block_dim != dim {
                return Err(Error::DimensionMismatch {
                    context: "factor coefficient width",
                    expected: block_dim,
                    found: dim,
                });
            }
        }
        Ok(())
    }

    pub fn set_linearization(&mut self, x: DVector<f64>) -> Result<()> {
        ensure_len(&x, self.dim(), "window linearization point")?;
        self.linearization = x;
        Ok(())
    }

    pub fn has_relinearizable(&self) -> bool {
        self.factors.iter().any(|f| !f.is_linear())
    }

    fn gather(&self, factor: &Factor, x: &DVector<f64>) -> DVector<f64> {
        let total: usize = factor.dims().iter().sum();
        let mut local = DVector::zeros(total);
        let mut row = 0;
        for &id in factor.vars() {
            let (offset, dim) = self.offset_of(id).expect("factor checked on insertion");
            local.rows_mut(row, dim).copy_from(&x.rows(offset, dim));
            row += dim;
        }
        local
    }

    /// Every connected component of the factor graph must contain a prior.
    pub fn check_anchored(&self) -> Result<()> {
        let n = self.blocks.len();
        let index = |id: VarId| self.blocks.iter().position(|b| b.id == id).unwrap();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for f in &self.factors {
            let first = index(f.vars()[0]);
            for &id in &f.vars()[1..] {
                let (a, b) = (find(&mut parent, first), find(&mut parent, index(id)));
                parent[a] = b;
            }
        }
        let mut anchored = vec![false; n];
        for f in self.factors.iter().filter(|f| f.kind() == FactorKind::Prior) {
            let root = find(&mut parent, index(f.vars()[0]));
            anchored[root] = true;
        }
        let missing: Vec<VarId> = (0..n)
            .filter(|&i| !anchored[find(&mut parent, i)])
            .map(|i| self.blocks[i].id)
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Unanchored(missing))
        }
    }

    /// Stack all factors, in insertion order, at the current linearization point.
    pub fn assemble(&self) -> Result<LinearizedSystem> {
        self.assemble_at(&self.linearization)
    }

    pub fn assemble_at(&self, x: &DVector<f64>) -> Result<LinearizedSystem> {
        ensure_len(x, self.dim(), "window linearization point")?;
        self.check_anchored()?;
        let rows = self.rows();
        let cols = self.dim();
        let mut a = DMatrix::zeros(rows, cols);
        let mut noise = DMatrix::zeros(rows, rows);
        let mut b = DVector::zeros(rows);
        let mut row = 0;
        for f in &self.factors {
            let local = self.gather(f, x);
            let (blocks, rhs) = f.linearize(&local)?;
            let r = f.rows();
            for (&id, block) in f.vars().iter().zip(&blocks) {
                let (offset, dim) = self.offset_of(id).expect("factor checked on insertion");
                let mut dst = a.view_mut((row, offset), (r, dim));
                dst += block;
            }
            noise.view_mut((row, row), (r, r)).copy_from(f.noise());
            b.rows_mut(row, r).copy_from(&rhs);
            row += r;
        }
        Ok(LinearizedSystem { a, noise, b })
    }

    /// Weighted sum of squared residuals at `x`, using the nonlinear models.
    pub fn objective_at(&self, x: &DVector<f64>) -> Result<f64> {
        ensure_len(x, self.dim(), "window linearization point")?;
        Ok(self
            .factors
            .iter()
            .map(|f| f.weighted_error(&self.gather(f, x)))
            .sum())
    }

    /// A single linear solve at the current linearization point.
    pub fn solve(&self) -> Result<SolveResult> {
        self.solve_at(&self.linearization)
    }

    pub(crate) fn solve_at(&self, x: &DVector<f64>) -> Result<SolveResult> {
        let (aw, bw) = self.whitened_at(x)?;
        solve_whitened(aw, bw)
    }

    /// `L⁻¹ A_w` and `L⁻¹ b_w`, whitening each factor with its own noise factor.
    fn whitened_at(&self, x: &DVector<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
        ensure_len(x, self.dim(), "window linearization point")?;
        self.check_anchored()?;
        let mut aw = DMatrix::zeros(self.rows(), self.dim());
        let mut bw = DVector::zeros(self.rows());
        let mut row = 0;
        for f in &self.factors {
            let (blocks, rhs) = f.linearize(&self.gather(f, x))?;
            let r = f.rows();
            for (&id, block) in f.vars().iter().zip(&blocks) {
                let (offset, dim) = self.offset_of(id).expect("factor checked on insertion");
                let mut dst = aw.view_mut((row, offset), (r, dim));
                dst += f.whitener() * block;
            }
            bw.rows_mut(row, r).copy_from(&(f.whitener() * rhs));
            row += r;
        }
        Ok((aw, bw))
    }

    /// Iterated solve with relinearization; see [`GaussNewtonOptions`].
    pub fn gauss_newton(&self, options: &GaussNewtonOptions) -> Result<SolveResult> {
        gauss_newton(self, options)
    }

    /// Remove `drop` from the window, folding its information into a prior.
    ///
    /// The factors summarized are those touching `drop` together with any
    /// factor living entirely on its neighbours (for a chain this absorbs the
    /// measurement of the next state, so the new oldest state carries only a
    /// prior). The group is linearized at the current point and solved on its
    /// own; the Schur complement of `drop` gives the new prior over the
    /// neighbours, which is inserted at the front of the factor list either as
    /// one dense factor or as one factor per block.
    pub fn marginalize_variable(&mut self, drop: VarId, mode: PriorMode) -> Result<GaussianBelief> {
        if !self.contains(drop) {
            return Err(Error::UnknownVariable(drop));
        }
        let neighbours: Vec<VarId> = self
            .blocks
            .iter()
            .map(|b| b.id)
            .filter(|&id| {
                id != drop && self.factors.iter().any(|f| f.touches(drop) && f.touches(id))
            })
            .collect();
        let in_group = |id: &VarId| *id == drop || neighbours.contains(id);
        let group: Vec<Factor> = self
            .factors
            .iter()
            .filter(|f| f.vars().iter().all(in_group))
            .cloned()
            .collect();

        let mut sub = FactorWindow::new();
        for b in self.blocks.iter().filter(|b| in_group(&b.id)) {
            sub.add_variable(b.id, self.value_of(b.id)?)?;
        }
        sub.factors = group;
        let solved = sub.solve()?;
        let prior = marginalize(&solved.information, &solved.estimate, sub.blocks(), &neighbours)?;

        let (offset, dim) = self.offset_of(drop).expect("checked above");
        self.linearization = std::mem::replace(&mut self.linearization, DVector::zeros(0))
            .remove_rows(offset, dim);
        self.blocks.retain(|b| b.id != drop);

        let priors = match mode {
            PriorMode::ExactJoint if prior.dim() > 0 => vec![Factor::from_belief(&prior)?],
            PriorMode::ExactJoint => Vec::new(),
            PriorMode::BlockDiagonal => prior
                .split_blocks()
                .iter()
                .map(Factor::from_belief)
                .collect::<Result<_>>()?,
        };
        self.factors.retain(|f| !f.vars().iter().all(in_group));
        self.factors.splice(0..0, priors);
        Ok(prior)
    }
}
