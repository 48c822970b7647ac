use serde::{Deserialize, Serialize};

use crate::exponents::fit_envelope;

use super::series::ControlSeries;

/// Grid step of fitted exponents.
pub const GRID: f64 = 0.05;
/// Slack factor on fitted constants and bounds.
pub const SLACK: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    /// Smallest grid exponent not below the envelope slope; `None` when degenerate.
    pub xi: Option<f64>,
    /// Largest constant valid on every checked sample, divided by the slack.
    pub c: f64,
    pub checked: usize,
    /// Radial samples (`∇′f = 0`), excluded from `s̃`-parametrized checks.
    pub excluded_radial: usize,
    /// Samples where the derivative was not positive: the inequality fails there.
    pub nonpositive: usize,
    /// No usable samples, or `|g|` constant over them.
    pub degenerate: bool,
}

impl GrowthFit {
    /// A fit exists with `ξ < 1` and no failing samples.
    pub fn holds(&self) -> bool {
        !self.degenerate && self.nonpositive == 0 && self.xi.is_some_and(|x| x < 1.0)
    }

    pub fn xi_at_least_one(&self) -> bool {
        self.xi.is_some_and(|x| x >= 1.0)
    }
}

/// Fits `rate ≥ c·level^ξ` on `(level, rate)` pairs with `level > 0`.
pub fn fit_power_lower_bound(pairs: &[(f64, f64)], excluded_radial: usize) -> GrowthFit {
    let mut nonpositive = 0;
    let mut logs = Vec::with_capacity(pairs.len());
    for &(level, rate) in pairs {
        if !(rate > 0.0) {
            nonpositive += 1;
        } else if level > 0.0 {
            logs.push((level.ln(), rate.ln()));
        }
    }
    let degenerate_fit = GrowthFit {
        xi: None,
        c: 0.0,
        checked: logs.len(),
        excluded_radial,
        nonpositive,
        degenerate: true,
    };
    let (lo, hi) = logs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    if logs.len() < 2 || !(hi - lo > 1e-12 * lo.abs().max(1.0)) {
        return degenerate_fit;
    }
    let env = fit_envelope(&logs);
    let slope = env.rho.max(0.0);
    // round up to the grid, absorbing roundoff just above a grid point
    let xi = ((slope / GRID) - 1e-9).ceil().max(0.0) * GRID;
    let c = crate::exponents::constant_for(&logs, xi) / SLACK;
    GrowthFit { xi: Some(xi), c, checked: logs.len(), excluded_radial, nonpositive, degenerate: false }
}

fn growth_pairs(series: &ControlSeries) -> Vec<(f64, f64)> {
    series.points.iter().filter(|p| !p.is_radial()).map(|p| (p.h, p.dg_dstilde)).collect()
}

/// `dg/ds̃ ≥ c|g|^ξ` on the non-radial samples of the series.
pub fn growth_check(series: &ControlSeries) -> GrowthFit {
    let radial = series.points.iter().filter(|p| p.is_radial()).count();
    fit_power_lower_bound(&growth_pairs(series), radial)
}

/// Largest `c` (divided by the slack) with `dg/ds̃ ≥ c|g|^ξ` at a fixed `ξ`;
/// 0 if some non-radial sample has a non-positive rate.
pub fn growth_constant(series: &ControlSeries, xi: f64) -> f64 {
    let pairs = growth_pairs(series);
    if pairs.iter().any(|&(_, rate)| !(rate > 0.0)) {
        return 0.0;
    }
    let logs: Vec<(f64, f64)> = pairs.iter().filter(|p| p.0 > 0.0).map(|&(h, rate)| (h.ln(), rate.ln())).collect();
    if logs.is_empty() {
        return 0.0;
    }
    crate::exponents::constant_for(&logs, xi) / SLACK
}
