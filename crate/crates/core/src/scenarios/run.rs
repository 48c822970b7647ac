use num_rational::Rational64;
use rayon::prelude::*;

use crate::control::{control_series, length_accounting, ControlSeries, DiagnosticsReport};
use crate::exponents::{
    band_from_tail, estimate_asymptotic_critical_value, estimate_bochnak_constant, estimate_characteristic_exponent,
    estimate_lojasiewicz, estimate_omega, lojasiewicz_constant, BochnakEstimate, ControlParams,
    CriticalValueReport, ExponentReport, LojasiewiczEstimate, ShellSampler, DEFAULT_DENOMINATOR_BOUND,
};
use crate::flow::{
    integrate_polar_2d, integrate_riemannian, integrate_trajectory, PolarScenario2D, PolarTrajectory,
    TrajectoryRecord,
};

use super::checks::{evaluate_checks, CheckOutcome};
use super::{Check, Scenario, ScenarioError, ScenarioSummary};

#[derive(Debug, Clone)]
pub struct StartOutcome {
    pub index: usize,
    pub start: Vec<f64>,
    pub expected_a: Option<f64>,
    pub record: Option<TrajectoryRecord>,
    pub exponent: Option<ExponentReport>,
    pub critical: Option<CriticalValueReport>,
    /// Exponent and critical value used for the control functions.
    pub params: Option<ControlParams>,
    pub series: Option<ControlSeries>,
    pub diagnostics: Option<DiagnosticsReport>,
    /// `stage: message` for every stage that failed.
    pub errors: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PolarOutcome {
    pub trajectory: PolarTrajectory,
    /// Least-squares slope of `1/θ` against `−ln r` over `fit_range`.
    pub log_slope: Option<f64>,
    pub fit_range: [f64; 2],
    pub fit_points: usize,
}

/// Sample-based estimates that depend on `f` only.
#[derive(Debug, Clone, Default)]
pub struct FunctionEstimates {
    pub lojasiewicz: Option<LojasiewiczEstimate>,
    /// `(ρ, c)`: the largest `c` with `|∇f| ≥ c|f|^ρ` at a prescribed `ρ`.
    pub constant_at: Option<(f64, f64)>,
    pub bochnak: Option<BochnakEstimate>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub summary: ScenarioSummary,
    pub starts: Vec<StartOutcome>,
    pub polar: Option<Result<PolarOutcome, String>>,
    pub function: FunctionEstimates,
    pub checks: Vec<CheckOutcome>,
}

impl ScenarioRun {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// `(slope, intercept)` of the least-squares line; `None` with fewer than two
/// distinct abscissae.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys).take(n) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn function_estimates(sc: &Scenario) -> FunctionEstimates {
    let sampler = ShellSampler { seed: sc.seed, ..ShellSampler::default() };
    let mut out = FunctionEstimates::default();
    match estimate_lojasiewicz(&sc.f, &sampler, sc.sample_count) {
        Ok(e) => out.lojasiewicz = Some(e),
        Err(e) => out.errors.push(format!("lojasiewicz: {e}")),
    }
    match estimate_bochnak_constant(&sc.f, &sampler, sc.sample_count) {
        Ok(e) => out.bochnak = Some(e),
        Err(e) => out.errors.push(format!("bochnak: {e}")),
    }
    let rho_fixed = sc.checks.iter().find_map(|c| match c {
        Check::Lojasiewicz { rho_fixed, .. } => Some(*rho_fixed),
        _ => None,
    });
    if let Some(rho) = rho_fixed {
        match lojasiewicz_constant(&sc.f, &sampler, sc.sample_count, rho) {
            Ok(c) => out.constant_at = Some((rho, c)),
            Err(e) => out.errors.push(format!("lojasiewicz constant: {e}")),
        }
    }
    out
}

fn run_start(sc: &Scenario, index: usize, fun: &FunctionEstimates) -> StartOutcome {
    let start = &sc.starts[index];
    let mut out = StartOutcome {
        index,
        start: start.x.clone(),
        expected_a: start.expected_a,
        record: None,
        exponent: None,
        critical: None,
        params: None,
        series: None,
        diagnostics: None,
        errors: Vec::new(),
    };
    let rec = match &sc.metric {
        Some(m) => integrate_riemannian(&sc.f, m, &start.x, &sc.integrator),
        None => integrate_trajectory(&sc.f, &start.x, &sc.integrator),
    };
    let rec = match rec {
        Ok(r) => r,
        Err(e) => {
            out.errors.push(format!("integrate: {e}"));
            return out;
        }
    };
    let l: Option<Rational64> = match estimate_characteristic_exponent(&rec, sc.tail_fraction, DEFAULT_DENOMINATOR_BOUND) {
        Ok(rep) => {
            let l = rep.l_hat;
            out.exponent = Some(rep);
            Some(l)
        }
        Err(e) => {
            out.errors.push(format!("characteristic exponent: {e}"));
            sc.l_seed
        }
    };
    let Some(l) = sc.control.l.or(l) else {
        out.record = Some(rec);
        return out;
    };
    let a = match estimate_asymptotic_critical_value(&rec, l, sc.tail_fraction) {
        Ok((a, rep)) => {
            out.critical = Some(rep);
            Some(a)
        }
        Err(e) => {
            out.errors.push(format!("critical value: {e}"));
            start.expected_a.or(sc.a_seed)
        }
    };
    let Some(a) = sc.control.a.or(a) else {
        out.record = Some(rec);
        return out;
    };
    let mut params = ControlParams::new(l, a);
    if let Some(alpha) = sc.control.alpha {
        params.alpha = alpha;
    }
    // ω must exceed α for the η-band to be non-empty
    params.set_omega(estimate_omega(&rec, l, sc.tail_fraction).max(2.0 * params.alpha));
    params.u_band = band_from_tail(&rec, l, sc.tail_fraction);
    if let (Some(b), Some(lj)) = (&fun.bochnak, &fun.lojasiewicz) {
        if b.c_f > 0.0 && !lj.insufficient_data {
            params.set_eps_from(b.c_f, lj.rho);
        }
    }
    match control_series(&rec, &params) {
        Ok(series) => {
            out.diagnostics = Some(length_accounting(&rec, &series));
            out.series = Some(series);
        }
        Err(e) => out.errors.push(format!("control: {e}")),
    }
    out.params = Some(params);
    out.record = Some(rec);
    out
}

fn run_polar(sc: &Scenario) -> Option<Result<PolarOutcome, String>> {
    let p = sc.polar?;
    let fit_range = sc
        .checks
        .iter()
        .find_map(|c| match c {
            Check::LogLaw { r_range, .. } => Some(*r_range),
            _ => None,
        })
        .unwrap_or([p.r_min, 1e-6]);
    let result = PolarScenario2D::new(&sc.f)
        .map_err(|e| e.to_string())
        .and_then(|ps| {
            let mut cfg = sc.integrator.clone();
            cfg.r_min = p.r_min;
            integrate_polar_2d(&ps, p.r0, p.theta0, &cfg).map_err(|e| e.to_string())
        })
        .map(|trajectory| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = trajectory
                .samples
                .iter()
                .filter(|s| s.r >= fit_range[0] * (1.0 - 1e-12) && s.r <= fit_range[1] && s.theta != 0.0)
                .map(|s| (-s.r.ln(), 1.0 / s.theta))
                .unzip();
            let log_slope = line_fit(&xs, &ys).map(|(m, _)| m);
            PolarOutcome { trajectory, log_slope, fit_range, fit_points: xs.len() }
        });
    Some(result)
}

/// Integrates every start, estimates exponents and runs the control
/// diagnostics, then evaluates the scenario's checks. Starts run in parallel
/// on the current rayon pool; results keep the start order.
pub fn run_scenario(sc: &Scenario) -> Result<ScenarioRun, ScenarioError> {
    sc.validate()?;
    let (function, polar) = rayon::join(|| function_estimates(sc), || run_polar(sc));
    let starts: Vec<StartOutcome> =
        (0..sc.starts.len()).into_par_iter().map(|i| run_start(sc, i, &function)).collect();
    let mut run = ScenarioRun { summary: sc.summary(), starts, polar, function, checks: Vec::new() };
    run.checks = evaluate_checks(sc, &run);
    Ok(run)
}
