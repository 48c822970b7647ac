use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::flow::TrajectoryRecord;

use super::rational::{serde_ratio, to_f64};
use super::ExponentError;

/// Constants of the control-function argument for one characteristic exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlParams {
    #[serde(with = "serde_ratio")]
    pub l: Rational64,
    /// Asymptotic critical value of `F = f/r^l`.
    pub a: f64,
    pub alpha: f64,
    pub omega: f64,
    pub eta: f64,
    /// Exponent of the band `U_l^δ`.
    pub delta: f64,
    /// Width exponent of `W^ε_l`: `|r∂_r f/f − l| ≤ r^w_delta`.
    pub w_delta: f64,
    pub eps: f64,
    pub xi: f64,
    pub c_f: f64,
    /// `(c, C)` with `U_l = {c < |f|/r^l < C}`.
    pub u_band: [f64; 2],
    pub lambda: f64,
    /// Characteristic exponents below `l` whose `W^ε` sets may host F-decreases.
    #[serde(with = "serde_ratio::vec")]
    pub lower_exponents: Vec<Rational64>,
}

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_W_DELTA: f64 = 0.1;
/// `|1 − lf/(r∂_r f)|` at or below this counts as exactly 0.
const ROUNDOFF_DEVIATION: f64 = 1e-13;
/// Upper cap on the estimated `ω`.
pub const OMEGA_CAP: f64 = 1.0;

impl ControlParams {
    pub fn new(l: Rational64, a: f64) -> Self {
        let lf = to_f64(l);
        let omega = OMEGA_CAP;
        ControlParams {
            l,
            a,
            alpha: DEFAULT_ALPHA,
            omega,
            eta: 0.5 * (DEFAULT_ALPHA + omega),
            delta: 0.05,
            w_delta: DEFAULT_W_DELTA,
            eps: 0.5,
            xi: 0.5,
            c_f: lf,
            u_band: [0.0, f64::INFINITY],
            lambda: lf,
            lower_exponents: Vec::new(),
        }
    }

    pub fn l_f64(&self) -> f64 {
        to_f64(self.l)
    }

    /// `ε = min(½c_f/l, ½c_f(1 − ρ_f))`.
    pub fn set_eps_from(&mut self, c_f: f64, rho_f: f64) {
        self.c_f = c_f;
        let by_l = 0.5 * c_f / self.l_f64();
        let by_rho = 0.5 * c_f * (1.0 - rho_f);
        self.eps = if by_rho.is_finite() && by_rho > 0.0 { by_l.min(by_rho) } else { by_l };
    }

    /// Sets `ω` and keeps `η` at the midpoint of `(α, ω)`.
    pub fn set_omega(&mut self, omega: f64) {
        self.omega = omega;
        self.eta = 0.5 * (self.alpha + omega);
    }

    pub fn validate(&self) -> Result<(), ExponentError> {
        let bad = |m: String| Err(ExponentError::InvalidParams(m));
        if !(self.l_f64() > 0.0) {
            return bad(format!("l = {} must be positive", self.l));
        }
        if !(0.0 < self.alpha && self.alpha < self.eta && self.eta < self.omega) {
            return bad(format!(
                "need 0 < alpha < eta < omega, got {} / {} / {}",
                self.alpha, self.eta, self.omega
            ));
        }
        if !(self.eps > 0.0 && self.eps <= 0.5 * self.c_f / self.l_f64() * (1.0 + 1e-12)) {
            return bad(format!("eps = {} must lie in (0, c_f/(2l)]", self.eps));
        }
        if !(self.xi < 1.0) {
            return bad(format!("xi = {} must be below 1", self.xi));
        }
        if !(self.u_band[0] < self.u_band[1]) {
            return bad("empty U_l band".into());
        }
        Ok(())
    }
}

/// Tail samples: the last `max(min_len, ⌈fraction·n⌉)` of the record.
pub(crate) fn tail_range(n: usize, fraction: f64, min_len: usize) -> std::ops::Range<usize> {
    let k = ((fraction * n as f64).ceil() as usize).max(min_len).min(n);
    (n - k)..n
}

/// Largest `ω ≤ OMEGA_CAP` with `|1 − lf/(r∂_r f)| ≤ ½r^{2ω}` on the tail samples
/// with `r < 1`.
pub fn estimate_omega(traj: &TrajectoryRecord, l: Rational64, tail_fraction: f64) -> f64 {
    let lf = to_f64(l);
    let range = tail_range(traj.len(), tail_fraction, 50);
    traj.samples[range]
        .iter()
        .filter(|s| s.r < 1.0 && s.split.radial != 0.0)
        .map(|s| {
            let dev = (1.0 - lf * s.f_val / (s.r * s.split.radial)).abs();
            // deviations at roundoff level carry no decay information
            if dev <= ROUNDOFF_DEVIATION {
                f64::INFINITY
            } else {
                (2.0 * dev).ln() / (2.0 * s.r.ln())
            }
        })
        .fold(OMEGA_CAP, f64::min)
}

/// Tenfold margin around the tail range of `|f|/r^l`.
pub fn band_from_tail(traj: &TrajectoryRecord, l: Rational64, tail_fraction: f64) -> [f64; 2] {
    let lf = to_f64(l);
    let range = tail_range(traj.len(), tail_fraction, 50);
    let (lo, hi) = traj.samples[range]
        .iter()
        .map(|s| s.f_val.abs() / s.r.powf(lf))
        .fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
    [lo / 10.0, hi * 10.0]
}
