use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::{Factor, FactorKind, FactorWindow, GaussNewtonOptions, Observation, PriorMode, VarId};
use crate::error::{Error, Result};
use crate::model::{ensure_len, DiscreteLinearSystem, GaussianBelief};

/// Output of one window step: the newest state's marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowEstimate {
    pub step: usize,
    pub newest: GaussianBelief,
    pub iterations: usize,
    pub converged: bool,
    pub objective_history: Vec<f64>,
}

/// Sliding-window factor graph estimator over the unified time-series state.
///
/// The window holds at most `capacity` transition/measurement pairs
/// (`capacity + 1` states). When a new pair pushes it over, the oldest state
/// is marginalized before the window is solved.
#[derive(Debug, Clone)]
pub struct SlidingWindowSmoother {
    system: DiscreteLinearSystem,
    observation: Observation,
    window: FactorWindow,
    states: VecDeque<VarId>,
    capacity: usize,
    mode: PriorMode,
    options: GaussNewtonOptions,
    next_id: u32,
    steps: usize,
}

impl SlidingWindowSmoother {
    pub fn new(
        system: DiscreteLinearSystem,
        observation: Observation,
        prior: (DVector<f64>, DMatrix<f64>),
        capacity: usize,
        mode: PriorMode,
        options: GaussNewtonOptions,
    ) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("window length must be at least 1".into()));
        }
        let n = system.state_dim();
        if observation.state_dim() != n {
            return Err(Error::DimensionMismatch {
                context: "observation state dimension",
                expected: n,
                found: observation.state_dim(),
            });
        }
        let (mean, cov) = prior;
        ensure_len(&mean, n, "prior mean")?;
        let first = VarId(0);
        let mut window = FactorWindow::new();
        window.add_variable(first, mean.clone())?;
        window.add_factor(Factor::prior(first, mean, cov)?)?;
        Ok(Self {
            system,
            observation,
            window,
            states: VecDeque::from([first]),
            capacity,
            mode,
            options,
            next_id: 1,
            steps: 0,
        })
    }

    /// Linear-Gaussian observation taken from the system's `C` and `R`.
    pub fn linear(
        system: DiscreteLinearSystem,
        prior: (DVector<f64>, DMatrix<f64>),
        capacity: usize,
        mode: PriorMode,
    ) -> Result<Self> {
        let observation = Observation::Linear {
            c: system.c().clone(),
            r: system.r().clone(),
        };
        Self::new(
            system,
            observation,
            prior,
            capacity,
            mode,
            GaussNewtonOptions::default(),
        )
    }

    pub fn window(&self) -> &FactorWindow {
        &self.window
    }

    pub fn states(&self) -> impl Iterator<Item = VarId> + '_ {
        self.states.iter().copied()
    }

    /// Add the transition driven by `u` and the measurement `y` of the new
    /// state; marginalize the oldest state if the window overflows.
    pub fn append(&mut self, y: &DVector<f64>, u: &DVector<f64>) -> Result<()> {
        let n = self.system.state_dim();
        ensure_len(u, self.system.input_dim(), "control input")?;
        ensure_len(y, self.observation.measurement_dim(), "measurement")?;
        let prev = *self.states.back().expect("window never empty");
        let id = VarId(self.next_id);
        let between = Factor::linear(
            FactorKind::Between,
            vec![(prev, -self.system.f()), (id, DMatrix::identity(n, n))],
            self.system.b() * u,
            self.system.q().clone(),
        )?;
        let measurement = self.observation.factor(&[(id, n)], y.clone())?;

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

    pub fn step(&mut self, y: &DVector<f64>, u: &DVector<f64>) -> Result<WindowEstimate> {
        self.append(y, u)?;
        let solved = self.window.gauss_newton(&self.options)?;
        self.window.set_linearization(solved.estimate.clone())?;
        self.steps += 1;

        let newest = *self.states.back().expect("window never empty");
        let (offset, dim) = self.window.offset_of(newest).expect("state in window");
        let cov = solved.covariance()?;
        let belief = GaussianBelief::single(
            newest,
            solved.estimate.rows(offset, dim).into_owned(),
            cov.view((offset, offset), (dim, dim)).into_owned(),
        )?;
        Ok(WindowEstimate {
            step: self.steps,
            newest: belief,
            iterations: solved.iterations,
            converged: solved.converged,
            objective_history: solved.objective_history,
        })
    }
}
