//! Graphical state space model: a sliding window over the partitioned
//! model, with the constant block `x_b` held as one variable shared by every
//! step instead of being propagated as a time series.

mod dims;
mod window;

pub use dims::{dimension_report, DimensionReport, Dims};
pub use window::{GssmEstimate, GssmPriors, GssmWindow, CONSTANT_BLOCK};
