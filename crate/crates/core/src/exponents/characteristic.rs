use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::flow::TrajectoryRecord;

use super::extrapolate::{beta_grid, extrapolate, TailModel};
use super::params::tail_range;
use super::rational::{rationalize, serde_ratio};
use super::ExponentError;

/// Minimum number of tail samples.
pub const MIN_TAIL: usize = 50;
/// The tail must satisfy `|∂_r f| ≥ ε|∇′f|` for this `ε` at least.
pub const TAIL_EPS_FLOOR: f64 = 1e-3;
/// Spread of `r∂_r f/f` beyond which no limit is reported.
pub const MAX_SPREAD: f64 = 0.5;
pub const DEFAULT_DENOMINATOR_BOUND: i64 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    #[serde(with = "serde_ratio")]
    pub l_hat: Rational64,
    pub raw_limit: f64,
    /// Arc-length window `(s_from, s_to)` of the tail.
    pub window: [f64; 2],
    pub max_deviation: f64,
    pub denominator_bound: i64,
    /// `l_hat` is within `max_deviation` of `raw_limit`.
    pub rational_fit: bool,
    pub sample_count: usize,
    /// Smallest `|∂_r f|/|∇′f|` on the tail.
    pub tail_eps: f64,
    pub model: TailModel,
}

/// Rationalized limit of a series `q(r)`.
pub fn exponent_from_series(
    r: &[f64],
    q: &[f64],
    window: [f64; 2],
    denominator_bound: i64,
) -> Result<ExponentReport, ExponentError> {
    if q.len() < MIN_TAIL {
        return Err(ExponentError::TailTooShort { have: q.len(), need: MIN_TAIL });
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(ExponentError::NonFinite);
    }
    let tail = extrapolate(r, q, &beta_grid());
    if tail.spread > MAX_SPREAD {
        return Err(ExponentError::NoLimit { spread: tail.spread });
    }
    let max_deviation = tail.spread.max(64.0 * f64::EPSILON * tail.value.abs());
    let rat = rationalize(tail.value, max_deviation, denominator_bound)
        .ok_or(ExponentError::NonFinite)?;
    if rat.value <= Rational64::from_integer(0) {
        return Err(ExponentError::NonPositive(tail.value));
    }
    Ok(ExponentReport {
        l_hat: rat.value,
        raw_limit: tail.value,
        window,
        max_deviation,
        denominator_bound,
        rational_fit: rat.within_tolerance,
        sample_count: q.len(),
        tail_eps: f64::INFINITY,
        model: tail.model,
    })
}

/// Limit of `r∂_r f/f` along the trajectory tail.
pub fn estimate_characteristic_exponent(
    traj: &TrajectoryRecord,
    tail_fraction: f64,
    denominator_bound: i64,
) -> Result<ExponentReport, ExponentError> {
    let range = tail_range(traj.len(), tail_fraction, MIN_TAIL);
    let tail = &traj.samples[range];
    if tail.len() < MIN_TAIL {
        return Err(ExponentError::TailTooShort { have: tail.len(), need: MIN_TAIL });
    }
    let tail_eps = tail
        .iter()
        .map(|s| {
            if s.split.spherical_norm == 0.0 {
                f64::INFINITY
            } else {
                s.split.radial.abs() / s.split.spherical_norm
            }
        })
        .fold(f64::INFINITY, f64::min);
    if tail_eps < TAIL_EPS_FLOOR {
        return Err(ExponentError::TailOutsideWEps { eps: tail_eps });
    }
    let (r, q): (Vec<f64>, Vec<f64>) = tail
        .iter()
        .filter(|s| s.f_val != 0.0)
        .map(|s| (s.r, s.r * s.split.radial / s.f_val))
        .unzip();
    let window = [tail[0].s, tail[tail.len() - 1].s];
    let mut rep = exponent_from_series(&r, &q, window, denominator_bound)?;
    rep.tail_eps = tail_eps;
    Ok(rep)
}
