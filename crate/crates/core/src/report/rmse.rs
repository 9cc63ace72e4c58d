use serde::{Deserialize, Serialize};

use super::series::EstimateSeries;
use crate::error::{Error, Result};

/// Root-mean-square error per state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateRmse {
    pub x: f64,
    pub v: f64,
    pub h: f64,
}

/// RMSE over the last `ceil(trailing · n)` rows of `series` (at least one).
pub fn compute_rmse(series: &EstimateSeries, trailing: f64) -> Result<StateRmse> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    if !(trailing > 0.0 && trailing <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "trailing fraction must lie in (0, 1], got {trailing}"
        )));
    }
    let n = series.len();
    let take = ((trailing * n as f64).ceil() as usize).clamp(1, n);
    let tail = &series.rows[n - take..];
    let rms = |i: usize| {
        (tail.iter().map(|r| r.error[i] * r.error[i]).sum::<f64>() / take as f64).sqrt()
    };
    Ok(StateRmse {
        x: rms(0),
        v: rms(1),
        h: rms(2),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseSummary {
    pub estimator: String,
    pub trailing_fraction: f64,
    pub per_run: Vec<StateRmse>,
    pub mean: StateRmse,
}

impl RmseSummary {
    pub fn from_runs(estimator: &str, trailing_fraction: f64, per_run: Vec<StateRmse>) -> Result<Self> {
        if per_run.is_empty() {
            return Err(Error::EmptySeries);
        }
        let n = per_run.len() as f64;
        let mean = StateRmse {
            x: per_run.iter().map(|r| r.x).sum::<f64>() / n,
            v: per_run.iter().map(|r| r.v).sum::<f64>() / n,
            h: per_run.iter().map(|r| r.h).sum::<f64>() / n,
        };
        Ok(Self {
            estimator: estimator.to_string(),
            trailing_fraction,
            per_run,
            mean,
        })
    }
}
