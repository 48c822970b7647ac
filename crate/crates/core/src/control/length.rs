use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::flow::TrajectoryRecord;

use super::growth::{fit_power_lower_bound, growth_check, growth_constant, GrowthFit, GRID, SLACK};
use super::monotone::{verify_monotone, Monitored, ViolationReport};
use super::series::ControlSeries;

/// Largest exponent tried for the logarithmic tail bound.
const DELTA_MAX: f64 = 5.0;
/// Largest exponent tried for the `τ`-bound on `h`.
const MU_MAX: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthBound {
    pub pass: bool,
    /// Exponent used in the bound; the fitted one, or `1 − GRID` when the fit gives `ξ ≥ 1`.
    pub xi: Option<f64>,
    pub c: f64,
    /// Largest `tail length / bound` over checked samples.
    pub worst_ratio: f64,
    pub checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogTailBound {
    /// Largest grid `δ` with `tail length ≤ 1.05·(−ln r)^{−δ}` for `r < 1/e`.
    pub delta: Option<f64>,
    pub checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauBound {
    /// Smallest grid `μ > 1` with `h^{μ−1} ≤ (C − (μ−1) ln τ)^{−1}` on samples with `τ < 1`.
    pub mu: Option<f64>,
    pub c: f64,
    pub checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub spherical_length_total: f64,
    pub spherical_length_by_region: BTreeMap<String, f64>,
    pub g_monotone: ViolationReport,
    pub f_monotone: ViolationReport,
    pub growth: GrowthFit,
    /// `d(F − a)/ds̃ ≥ c|F − a|^ρ₁` on samples with `|∂_r f| ≤ r^{−η}|∇′f|`.
    pub growth_f_allowed: GrowthFit,
    pub length_bound: LengthBound,
    pub log_tail: LogTailBound,
    pub tau_bound: TauBound,
    /// `min` and `max` of `σ/r` over the final decade of `r`.
    pub sigma_ratio_final: [f64; 2],
    /// `U_l` membership switches on at most once and holds at the end.
    pub u_l_single_entry: bool,
    pub residual_arc: f64,
    #[serde(skip)]
    pub sigma_ratio: Vec<[f64; 2]>,
}

/// `(r, σ/r)` per sample with `σ = s₀ − s`.
pub fn sigma_ratio_series(traj: &TrajectoryRecord) -> Vec<[f64; 2]> {
    (0..traj.len()).map(|i| [traj.samples[i].r, traj.sigma(i) / traj.samples[i].r]).collect()
}

/// Range of `σ/r` over the samples with `r ≤ 10·r_terminal`.
pub fn sigma_ratio_final_decade(traj: &TrajectoryRecord) -> [f64; 2] {
    let r_end = traj.last().r;
    sigma_ratio_series(traj)
        .into_iter()
        .filter(|p| p[0] <= 10.0 * r_end)
        .fold([f64::INFINITY, f64::NEG_INFINITY], |acc, p| [acc[0].min(p[1]), acc[1].max(p[1])])
}

fn length_bound(traj: &TrajectoryRecord, series: &ControlSeries, fit: &GrowthFit) -> LengthBound {
    // rate ≥ c h^ξ for ξ ≥ 1 gives no finite tail bound; refit c below 1
    let (xi, c) = match fit.xi {
        Some(x) if x < 1.0 => (Some(x), fit.c),
        Some(_) => (Some(1.0 - GRID), growth_constant(series, 1.0 - GRID)),
        None => (None, 0.0),
    };
    let Some(xi) = xi.filter(|_| c > 0.0) else {
        // with no fit only a zero tail length passes
        let pass = traj.samples.iter().all(|s| s.s_tilde_to_end == 0.0);
        let worst_ratio = if pass { 0.0 } else { f64::INFINITY };
        return LengthBound { pass, xi: None, c: 0.0, worst_ratio, checked: 0 };
    };
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (smp, p) in traj.samples.iter().zip(&series.points) {
        if p.is_radial() {
            continue;
        }
        let bound = SLACK * p.h.powf(1.0 - xi) / (c * (1.0 - xi));
        worst = worst.max(smp.s_tilde_to_end / bound);
        checked += 1;
    }
    LengthBound { pass: worst <= 1.0, xi: Some(xi), c, worst_ratio: worst, checked }
}

fn log_tail(traj: &TrajectoryRecord) -> LogTailBound {
    let pts: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .filter(|s| s.r < (-1f64).exp())
        .map(|s| (-s.r.ln(), s.s_tilde_to_end))
        .collect();
    let ok = |delta: f64| pts.iter().all(|&(u, len)| len <= SLACK * u.powf(-delta));
    let steps = (DELTA_MAX / GRID).round() as usize;
    let delta = (1..=steps).rev().map(|k| k as f64 * GRID).find(|&d| ok(d));
    LogTailBound { delta, checked: pts.len() }
}

fn tau_bound(traj: &TrajectoryRecord, series: &ControlSeries) -> TauBound {
    let pts: Vec<(f64, f64)> = (0..traj.len())
        .map(|i| (series.points[i].h, traj.sigma(i)))
        .filter(|&(h, tau)| tau < 1.0 && tau > 0.0 && h > 0.0)
        .collect();
    let steps = ((MU_MAX - 1.0) / GRID).round() as usize;
    for k in 1..=steps {
        let mu = 1.0 + k as f64 * GRID;
        let c = pts
            .iter()
            .map(|&(h, tau)| h.powf(1.0 - mu) + (mu - 1.0) * tau.ln())
            .fold(f64::INFINITY, f64::min);
        if pts.iter().all(|&(_, tau)| c - (mu - 1.0) * tau.ln() > 0.0) {
            return TauBound { mu: Some(mu), c, checked: pts.len() };
        }
    }
    TauBound { mu: None, c: f64::NAN, checked: pts.len() }
}

/// Tail spherical lengths and the bounds they obey along one trajectory.
pub fn length_accounting(traj: &TrajectoryRecord, series: &ControlSeries) -> DiagnosticsReport {
    assert_eq!(traj.len(), series.len(), "series must come from this trajectory");
    let mut by_region: BTreeMap<String, f64> = BTreeMap::new();
    for (smp, p) in traj.samples.iter().zip(&series.points) {
        if smp.ds_tilde > 0.0 {
            *by_region.entry(p.label.primary.name().to_string()).or_default() += smp.ds_tilde;
        }
    }
    let growth = growth_check(series);
    let eta = series.params.eta;
    let allowed: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .zip(&series.points)
        .filter(|(s, p)| !p.is_radial() && s.split.radial.abs() <= s.r.powf(-eta) * s.split.spherical_norm)
        .map(|(_, p)| ((p.big_f - series.params.a).abs(), p.df_dstilde))
        .collect();
    let radial = series.points.iter().filter(|p| p.is_radial()).count();
    let growth_f_allowed = fit_power_lower_bound(&allowed, radial);
    let u = series.points.iter().map(|p| p.label.member.u_l);
    let entries = u.clone().zip(u.clone().skip(1)).filter(|(a, b)| !a && *b).count();
    let exits = u.clone().zip(u.skip(1)).filter(|(a, b)| *a && !b).count();
    let ends_inside = series.points.last().is_some_and(|p| p.label.member.u_l);
    DiagnosticsReport {
        spherical_length_total: traj.spherical_length(),
        spherical_length_by_region: by_region,
        g_monotone: verify_monotone(series, Monitored::G),
        f_monotone: verify_monotone(series, Monitored::F),
        length_bound: length_bound(traj, series, &growth),
        growth,
        growth_f_allowed,
        log_tail: log_tail(traj),
        tau_bound: tau_bound(traj, series),
        sigma_ratio_final: sigma_ratio_final_decade(traj),
        u_l_single_entry: ends_inside && entries <= 1 && exits == 0,
        residual_arc: traj.residual_arc(),
        sigma_ratio: sigma_ratio_series(traj),
    }
}
