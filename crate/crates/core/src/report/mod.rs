//! Estimate series, their CSV form, and RMSE summaries.

mod monte_carlo;
mod rmse;
mod series;

pub use monte_carlo::{monte_carlo, run_comparison, MonteCarloReport};
pub use rmse::{compute_rmse, RmseSummary, StateRmse};
pub use series::{write_truth_csv, EstimateRow, EstimateSeries, SERIES_HEADER, TRUTH_HEADER};
