use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::factor::{
    Factor, FactorKind, FactorWindow, GaussNewtonOptions, LinearizedSystem, Observation,
    PriorMode, VarId,
};
use crate::model::{ensure_len, GaussianBelief, PartitionedDiscreteSystem};

/// Block id of the shared constant block `x_b`.
pub const CONSTANT_BLOCK: VarId = VarId(0);

/// Output of one GSSM step.
#[derive(Debug, Clone, PartialEq)]
pub struct GssmEstimate {
    pub step: usize,
    /// Marginal of the newest dynamic state `x_c`.
    pub dynamic: GaussianBelief,
    /// Marginal of the constant block `x_b`; empty when `n_b = 0`.
    pub constant: GaussianBelief,
    pub iterations: usize,
    pub converged: bool,
    pub objective_history: Vec<f64>,
}

/// Sliding window over the partitioned model.
///
/// Columns are ordered `[x_b, x_c(k), …, x_c(k+w)]` and rows
/// `[prior(x_b), prior(x_c(k)), between(k), measurement(k+1), …]`. The
/// constant block is a single variable shared by every transition and
/// measurement; it is never marginalized, so its id survives every slide.
#[derive(Debug, Clone)]
pub struct GssmWindow {
    system: PartitionedDiscreteSystem,
    observation: Observation,
    window: FactorWindow,
    constant: Option<VarId>,
    states: VecDeque<VarId>,
    capacity: usize,
    mode: PriorMode,
    options: GaussNewtonOptions,
    next_id: u32,
    steps: usize,
}

/// Priors of the constant block and of the oldest dynamic state.
#[derive(Debug, Clone, PartialEq)]
pub struct GssmPriors {
    pub constant_mean: DVector<f64>,
    pub constant_cov: DMatrix<f64>,
    pub dynamic_mean: DVector<f64>,
    pub dynamic_cov: DMatrix<f64>,
}

impl GssmWindow {
    /// `observation` acts on the stacked vector `[x_b; x_c]`.
    pub fn new(
        system: PartitionedDiscreteSystem,
        observation: Observation,
        priors: GssmPriors,
        capacity: usize,
        mode: PriorMode,
        options: GaussNewtonOptions,
    ) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("window length must be at least 1".into()));
        }
        let (n_b, n_c) = (system.constant_dim(), system.dynamic_dim());
        if observation.state_dim() != n_b + n_c {
            return Err(Error::DimensionMismatch {
                context: "observation state dimension",
                expected: n_b + n_c,
                found: observation.state_dim(),
            });
        }
        if observation.measurement_dim() != system.measurement_dim() {
            return Err(Error::DimensionMismatch {
                context: "observation measurement dimension",
                expected: system.measurement_dim(),
                found: observation.measurement_dim(),
            });
        }
        ensure_len(&priors.constant_mean, n_b, "constant-block prior mean")?;
        ensure_len(&priors.dynamic_mean, n_c, "dynamic prior mean")?;

        let mut window = FactorWindow::new();
        let constant = if n_b > 0 {
            window.add_variable(CONSTANT_BLOCK, priors.constant_mean.clone())?;
            window.add_factor(Factor::prior(
                CONSTANT_BLOCK,
                priors.constant_mean,
                priors.constant_cov,
            )?)?;
            Some(CONSTANT_BLOCK)
        } else {
            None
        };
        let first = VarId(1);
        window.add_variable(first, priors.dynamic_mean.clone())?;
        window.add_factor(Factor::prior(first, priors.dynamic_mean, priors.dynamic_cov)?)?;

        Ok(Self {
            system,
            observation,
            window,
            constant,
            states: VecDeque::from([first]),
            capacity,
            mode,
            options,
            next_id: 2,
            steps: 0,
        })
    }

    /// Linear observation `[C_b C_c]` taken from the system.
    pub fn linear_observation(system: &PartitionedDiscreteSystem) -> Observation {
        let m = system.measurement_dim();
        let (n_b, n_c) = (system.constant_dim(), system.dynamic_dim());
        let mut c = DMatrix::zeros(m, n_b + n_c);
        c.columns_mut(0, n_b).copy_from(system.c_b());
        c.columns_mut(n_b, n_c).copy_from(system.c_c());
        Observation::Linear {
            c,
            r: system.r().clone(),
        }
    }

    /// Window holding the priors followed by one transition/measurement pair
    /// per entry of `measurements`, without solving.
    pub fn build(
        system: PartitionedDiscreteSystem,
        observation: Observation,
        priors: GssmPriors,
        measurements: &[DVector<f64>],
        inputs: &[DVector<f64>],
        capacity: usize,
    ) -> Result<Self> {
        if measurements.len() != inputs.len() {
            return Err(Error::DimensionMismatch {
                context: "input and measurement stream lengths",
                expected: measurements.len(),
                found: inputs.len(),
            });
        }
        let mut gssm = Self::new(
            system,
            observation,
            priors,
            capacity,
            PriorMode::default(),
            GaussNewtonOptions::default(),
        )?;
        for (y, u) in measurements.iter().zip(inputs) {
            gssm.append(y, u)?;
        }
        Ok(gssm)
    }

    pub fn window(&self) -> &FactorWindow {
        &self.window
    }

    pub fn constant_id(&self) -> Option<VarId> {
        self.constant
    }

    pub fn dynamic_ids(&self) -> impl Iterator<Item = VarId> + '_ {
        self.states.iter().copied()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn assemble(&self) -> Result<LinearizedSystem> {
        self.window.assemble()
    }

    fn measured_blocks(&self, id: VarId) -> Vec<(VarId, usize)> {
        let mut vars = Vec::with_capacity(2);
        if let Some(b) = self.constant {
            vars.push((b, self.system.constant_dim()));
        }
        vars.push((id, self.system.dynamic_dim()));
        vars
    }

    /// Append `x_c(k+1)` with its transition and measurement factors;
    /// marginalize the oldest `x_c` if the window exceeds its capacity.
    ///
    /// The new state starts at the newest state's current value.
    pub fn append(&mut self, y: &DVector<f64>, u: &DVector<f64>) -> Result<()> {
        let n_c = self.system.dynamic_dim();
        ensure_len(u, self.system.input_dim(), "control input")?;
        ensure_len(y, self.system.measurement_dim(), "measurement")?;
        let prev = *self.states.back().expect("window never empty");
        let id = VarId(self.next_id);

        let mut terms = Vec::with_capacity(3);
        if let Some(b) = self.constant {
            terms.push((b, -self.system.f_b()));
        }
        terms.push((prev, -self.system.f_c()));
        terms.push((id, DMatrix::identity(n_c, n_c)));
        let between = Factor::linear(
            FactorKind::Between,
            terms,
            self.system.b() * u,
            self.system.q().clone(),
        )?;
        let measurement = self.observation.factor(&self.measured_blocks(id), y.clone())?;

        let init = self.window.value_of(prev)?;
        self.window.add_variable(id, init)?;
        self.window.add_factor(between)?;
        self.window.add_factor(measurement)?;
        self.next_id += 1;
        self.states.push_back(id);

        if self.states.len() > self.capacity + 1 {
            let oldest = self.states.pop_front().expect("window never empty");
            self.window.marginalize_variable(oldest, self.mode)?;
        }
        Ok(())
    }

    /// Append, solve by Gauss-Newton with full relinearization, and report
    /// the newest `x_c` and the constant block.
    pub fn step(&mut self, y: &DVector<f64>, u: &DVector<f64>) -> Result<GssmEstimate> {
        self.append(y, u)?;
        let solved = self.window.gauss_newton(&self.options)?;
        self.window.set_linearization(solved.estimate.clone())?;
        self.steps += 1;

        let cov = solved.covariance()?;
        let marginal = |id: Option<VarId>| -> Result<GaussianBelief> {
            match id {
                Some(id) => {
                    let (offset, dim) = self.window.offset_of(id).expect("block in window");
                    GaussianBelief::single(
                        id,
                        solved.estimate.rows(offset, dim).into_owned(),
                        cov.view((offset, offset), (dim, dim)).into_owned(),
                    )
                }
                None => GaussianBelief::new(DVector::zeros(0), DMatrix::zeros(0, 0), Vec::new()),
            }
        };
        let newest = *self.states.back().expect("window never empty");
        Ok(GssmEstimate {
            step: self.steps,
            dynamic: marginal(Some(newest))?,
            constant: marginal(self.constant)?,
            iterations: solved.iterations,
            converged: solved.converged,
            objective_history: solved.objective_history,
        })
    }
}
