//! Unit-speed gradient flow `dx/ds = ∇f/|∇f|` toward the origin.

mod crossing;
mod io;
mod polar;
mod rk;
mod trajectory;

use serde::{Deserialize, Serialize};

use crate::polyfun::{GradientSplit, PolyError};
use crate::scalar::Precision;

pub use crossing::{crossing_count, crossing_count_points, Crossings};
pub use io::{read_trajectory, write_trajectory, TrajectoryRow, TRAJECTORY_HEADER};
pub use polar::{integrate_polar_2d, PolarSample, PolarScenario2D, PolarTrajectory};
pub use rk::{Dopri5, StepControl};
pub use trajectory::{integrate_riemannian, integrate_trajectory, record_from_points};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("invalid integrator configuration: {0}")]
    Config(String),
    #[error("start point has |x| = {r:e}, not above r_min = {r_min:e}")]
    StartTooClose { r: f64, r_min: f64 },
    #[error("gradient vanishes at the start point (|∇f| = {0:e})")]
    VanishingGradientAtStart(f64),
    #[error("precision exhausted at s = {s:e}, r = {r:e}: non-finite value")]
    PrecisionExhausted { s: f64, r: f64 },
    #[error("step size underflow at s = {s:e}, r = {r:e}")]
    StepUnderflow { s: f64, r: f64 },
    #[error("metric is not positive definite at x = {0:?}")]
    MetricDegenerate(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedRMin,
    GradientVanished,
    StepBudget,
    LeftDomain,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::ReachedRMin => "reached_r_min",
            Termination::GradientVanished => "gradient_vanished",
            Termination::StepBudget => "step_budget",
            Termination::LeftDomain => "left_domain",
        })
    }
}

/// Step and termination controls.
///
/// Local error per component `i` is measured against
/// `abs_tol * r + rel_tol * |y_i|`, so `abs_tol` is relative to the
/// current radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub r_min: f64,
    pub grad_min: f64,
    pub max_steps: u64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub step_fraction: f64,
    pub sample_stride: usize,
    pub precision: Precision,
    /// Promote a binary64 run to double-double near the origin.
    pub auto_extend: bool,
    /// `LeftDomain` once `r` exceeds this multiple of the starting radius.
    pub escape_factor: f64,
}

impl IntegratorConfig {
    pub fn for_precision(precision: Precision) -> Self {
        match precision {
            Precision::Double => IntegratorConfig {
                r_min: 1e-10,
                grad_min: 1e-300,
                max_steps: 10_000_000,
                rel_tol: 1e-12,
                abs_tol: 1e-20,
                step_fraction: 1e-3,
                sample_stride: 1,
                precision,
                auto_extend: true,
                escape_factor: 10.0,
            },
            Precision::Extended => IntegratorConfig {
                r_min: 1e-14,
                rel_tol: 1e-16,
                abs_tol: 1e-30,
                ..IntegratorConfig::for_precision(Precision::Double)
            }
            .with_precision_field(precision),
        }
    }

    fn with_precision_field(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: &str| Err(FlowError::Config(m.to_string()));
        if !(self.r_min > 0.0 && self.r_min.is_finite()) {
            return bad("r_min must be positive");
        }
        if !(self.grad_min >= 0.0) {
            return bad("grad_min must be non-negative");
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return bad("step_fraction must lie in (0, 1)");
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.sample_stride == 0 {
            return bad("sample_stride must be positive");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        if !(self.escape_factor > 1.0) {
            return bad("escape_factor must exceed 1");
        }
        Ok(())
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig::for_precision(Precision::Double)
    }
}

/// One recorded point. Values are stored in binary64 whatever precision
/// the integration used; `split` was computed in that precision first.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub s: f64,
    /// Arc length since the previous sample (0 for the first).
    pub ds: f64,
    pub x: Vec<f64>,
    pub r: f64,
    pub f_val: f64,
    pub split: GradientSplit<f64>,
    pub s_tilde: f64,
    /// Spherical arc length since the previous sample.
    pub ds_tilde: f64,
    /// `<∇f, v>` for the unit velocity `v`; equals `|∇f|` in the Euclidean flow.
    pub df_ds: f64,
    /// `<v, x/r>`.
    pub dr_ds: f64,
    /// `ds̃/ds`: the component of `v` orthogonal to `x`, divided by `r`.
    pub sphere_rate: f64,
    /// Arc length from this sample to the last one.
    pub s_to_end: f64,
    pub s_tilde_to_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub samples: Vec<TrajectorySample>,
    pub termination: Termination,
    /// `f` increased strictly between every pair of samples with `|∇f| > grad_min`.
    pub f_monotone_ok: bool,
    pub steps_accepted: u64,
    pub steps_rejected: u64,
    /// Index of the first sample produced in double-double after an automatic switch.
    pub precision_switch: Option<usize>,
    pub riemannian: bool,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.samples.first().map_or(0, |s| s.x.len())
    }

    pub fn first(&self) -> &TrajectorySample {
        &self.samples[0]
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("records hold at least the start sample")
    }

    /// Estimate of the arc length beyond the last sample: the terminal radius.
    pub fn residual_arc(&self) -> f64 {
        self.last().r
    }

    /// `σ = s₀ − s` at sample `i`, with `s₀` the terminal `s` plus the residual.
    pub fn sigma(&self, i: usize) -> f64 {
        self.samples[i].s_to_end + self.residual_arc()
    }

    pub fn spherical_length(&self) -> f64 {
        self.last().s_tilde
    }

    /// Unit secant direction `x/|x|` at the last sample.
    pub fn terminal_direction(&self) -> Vec<f64> {
        let l = self.last();
        l.x.iter().map(|v| v / l.r).collect()
    }

    /// Secant direction at the first sample with `r <= radius`, if any.
    pub fn direction_at_radius(&self, radius: f64) -> Option<Vec<f64>> {
        self.samples
            .iter()
            .find(|s| s.r <= radius)
            .map(|s| s.x.iter().map(|v| v / s.r).collect())
    }

    /// Relative error of `Δf = ∫ df/ds ds` with the trapezoid rule over samples.
    pub fn energy_residual(&self) -> f64 {
        let mut integral = 0.0;
        for w in self.samples.windows(2) {
            integral += 0.5 * (w[0].df_ds + w[1].df_ds) * w[1].ds;
        }
        let df = self.last().f_val - self.first().f_val;
        if df == 0.0 {
            return integral.abs();
        }
        ((df - integral) / df).abs()
    }

    pub(crate) fn finish_suffix_sums(&mut self) {
        let mut acc = 0.0;
        let mut acc_t = 0.0;
        let mut next_ds = 0.0;
        let mut next_dt = 0.0;
        for s in self.samples.iter_mut().rev() {
            acc += next_ds;
            acc_t += next_dt;
            s.s_to_end = acc;
            s.s_tilde_to_end = acc_t;
            next_ds = s.ds;
            next_dt = s.ds_tilde;
        }
    }
}
