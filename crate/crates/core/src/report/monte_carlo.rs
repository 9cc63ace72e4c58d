use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rmse::{compute_rmse, RmseSummary, StateRmse};
use super::series::EstimateSeries;
use crate::error::Result;
use crate::radar::{measure_range, run_estimator, simulate_truth, EstimatorKind, ScenarioConfig};

/// Every configured estimator on one seed's truth and measurements.
pub fn run_comparison(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<EstimateSeries>> {
    let truth = simulate_truth(cfg, seed);
    let measurements = measure_range(&truth, cfg.range_variance, seed)?;
    cfg.estimators
        .iter()
        .map(|&kind| run_estimator(kind, cfg, &truth, &measurements))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub runs: usize,
    pub first_seed: u64,
    pub steps: usize,
    pub summaries: Vec<RmseSummary>,
}

impl MonteCarloReport {
    pub fn summary(&self, kind: EstimatorKind) -> Option<&RmseSummary> {
        self.summaries.iter().find(|s| s.estimator == kind.name())
    }
}

/// Runs seeds `cfg.seed .. cfg.seed + runs` in parallel on the current
/// rayon pool, then reduces per estimator in seed order.
pub fn monte_carlo(cfg: &ScenarioConfig, runs: usize, trailing: f64) -> Result<MonteCarloReport> {
    let per_seed: Vec<Vec<StateRmse>> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            run_comparison(cfg, cfg.seed.wrapping_add(i))?
                .iter()
                .map(|s| compute_rmse(s, trailing))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let summaries = cfg
        .estimators
        .iter()
        .enumerate()
        .map(|(j, kind)| {
            let per_run = per_seed.iter().map(|run| run[j]).collect();
            RmseSummary::from_runs(kind.name(), trailing, per_run)
        })
        .collect::<Result<_>>()?;
    Ok(MonteCarloReport {
        runs,
        first_seed: cfg.seed,
        steps: cfg.steps,
        summaries,
    })
}
