//! Control functions along trajectories and the length bounds they yield.

mod growth;
mod length;
mod monotone;
mod series;

pub use growth::{fit_power_lower_bound, growth_check, growth_constant, GrowthFit, GRID, SLACK};
pub use length::{
    length_accounting, sigma_ratio_final_decade, sigma_ratio_series, DiagnosticsReport, LengthBound, LogTailBound,
    TauBound,
};
pub use monotone::{monitored_value, verify_monotone, Monitored, Violation, ViolationReport, MONOTONE_TOL};
pub use series::{control_series, ControlPoint, ControlSeries};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error("l must be positive, got {0}")]
    NonPositiveL(f64),
}
