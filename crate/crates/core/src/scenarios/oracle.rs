//! Closed-form flow of `f = −½(x² + a y²)`: `(x₀e^{−t}, y₀e^{−at})`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("quadratic oracle needs a > 0, got {0}")]
    NonPositiveA(f64),
    #[error("start point is the origin")]
    ZeroStart,
    #[error("target radius {r_target:e} is not below the start radius {r0:e}")]
    TargetNotInside { r_target: f64, r0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OraclePoint {
    /// Gradient-flow time at which `|x| = r_target`.
    pub t: f64,
    pub x: [f64; 2],
    /// Spherical length from the start: the swept polar angle.
    pub s_tilde: f64,
}

/// `ln(e^p + e^q)` without overflow; `-inf` operands allowed.
fn log_add(p: f64, q: f64) -> f64 {
    let m = p.max(q);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((p - m).exp() + (q - m).exp()).ln()
}

/// Point of the closed-form trajectory from `x0` where `|x| = r_target`.
pub fn quadratic_oracle(a: f64, x0: [f64; 2], r_target: f64) -> Result<OraclePoint, OracleError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(OracleError::NonPositiveA(a));
    }
    let r0 = x0[0].hypot(x0[1]);
    if r0 == 0.0 {
        return Err(OracleError::ZeroStart);
    }
    if !(r_target < r0 && r_target > 0.0) {
        return Err(OracleError::TargetNotInside { r_target, r0 });
    }
    let (lx, ly) = (2.0 * x0[0].abs().ln(), 2.0 * x0[1].abs().ln());
    let target = 2.0 * r_target.ln();
    // φ(t) = ln|x(t)|² − target, strictly decreasing with slope in [−2max(1,a), −2min(1,a)]
    let phi = |t: f64| {
        let (p, q) = (lx - 2.0 * t, ly - 2.0 * a * t);
        let v = log_add(p, q);
        let w = ((p - v).exp() + a * (q - v).exp()) * -2.0;
        (v - target, w)
    };
    let mut lo = 0.0;
    let mut hi = (2.0 * r0.ln() - target) / (2.0 * a.min(1.0)) + 1.0;
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (v, dv) = phi(t);
        if v > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - v / dv;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let done = (next - t).abs() <= 1e-16 * t.max(1.0);
        t = next;
        if done {
            break;
        }
    }
    let x = [x0[0] * (-t).exp(), x0[1] * (-a * t).exp()];
    let s_tilde = if a == 1.0 { 0.0 } else { (x[1].atan2(x[0]) - x0[1].atan2(x0[0])).abs() };
    Ok(OraclePoint { t, x, s_tilde })
}
