use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::flow::TrajectoryRecord;

use super::characteristic::MIN_TAIL;
use super::extrapolate::{beta_grid, extrapolate, TailModel};
use super::params::tail_range;
use super::rational::to_f64;
use super::ExponentError;

/// Tail trends behind an asymptotic critical value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueReport {
    pub a: f64,
    pub spread: f64,
    pub model: TailModel,
    /// `|∇′f|/|∂_r f|` at the first and last tail sample.
    pub ratio_first: f64,
    pub ratio_last: f64,
    /// `r|∇F|` at the first and last tail sample.
    pub r_grad_f_first: f64,
    pub r_grad_f_last: f64,
    pub sample_count: usize,
}

impl CriticalValueReport {
    /// `|∇′f|/|∂_r f|` did not grow over the tail.
    pub fn ratio_decreasing(&self) -> bool {
        self.ratio_last <= self.ratio_first
    }

    pub fn r_grad_f_decreasing(&self) -> bool {
        self.r_grad_f_last <= self.r_grad_f_first
    }
}

/// `r^l` with an exact integer power when `l` is an integer.
pub(crate) fn pow_l(r: f64, l: Rational64) -> f64 {
    if l.is_integer() {
        r.powi(*l.numer() as i32)
    } else {
        r.powf(to_f64(l))
    }
}

/// Limit of `F = f/r^l` along the tail, with the tail trends of
/// `|∇′f|/|∂_r f|` and `r|∇F| = sqrt((r∂_r f − lf)² + r²|∇′f|²)/r^l`.
pub fn estimate_asymptotic_critical_value(
    traj: &TrajectoryRecord,
    l: Rational64,
    tail_fraction: f64,
) -> Result<(f64, CriticalValueReport), ExponentError> {
    let lf = to_f64(l);
    if !(lf > 0.0) {
        return Err(ExponentError::NonPositive(lf));
    }
    let range = tail_range(traj.len(), tail_fraction, MIN_TAIL);
    let tail = &traj.samples[range];
    if tail.len() < MIN_TAIL {
        return Err(ExponentError::TailTooShort { have: tail.len(), need: MIN_TAIL });
    }
    let r: Vec<f64> = tail.iter().map(|s| s.r).collect();
    let big_f: Vec<f64> = tail.iter().map(|s| s.f_val / pow_l(s.r, l)).collect();
    if big_f.iter().any(|v| !v.is_finite()) {
        return Err(ExponentError::Diverging);
    }
    // |F| growing by more than a factor 2 while the log-slope says r^-κ
    let (f0, f1) = (big_f[0].abs(), big_f[big_f.len() - 1].abs());
    if f1 > 2.0 * f0 && f1 > 1e-300 {
        let slope = (f1.ln() - f0.ln()) / (r[r.len() - 1].ln() - r[0].ln());
        if slope < -0.05 {
            return Err(ExponentError::Diverging);
        }
    }
    let t = extrapolate(&r, &big_f, &beta_grid());
    let ratio = |s: &crate::flow::TrajectorySample| {
        if s.split.radial == 0.0 {
            f64::INFINITY
        } else {
            s.split.spherical_norm / s.split.radial.abs()
        }
    };
    let r_grad_f = |s: &crate::flow::TrajectorySample| {
        let rad = s.r * s.split.radial - lf * s.f_val;
        let sph = s.r * s.split.spherical_norm;
        (rad * rad + sph * sph).sqrt() / pow_l(s.r, l)
    };
    let (first, last) = (&tail[0], &tail[tail.len() - 1]);
    let rep = CriticalValueReport {
        a: t.value,
        spread: t.spread,
        model: t.model,
        ratio_first: ratio(first),
        ratio_last: ratio(last),
        r_grad_f_first: r_grad_f(first),
        r_grad_f_last: r_grad_f(last),
        sample_count: tail.len(),
    };
    Ok((t.value, rep))
}
