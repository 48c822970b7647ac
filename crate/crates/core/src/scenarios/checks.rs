use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::control::{verify_monotone, Monitored};
use crate::flow::{crossing_count, integrate_riemannian, integrate_trajectory, TrajectoryRecord};
use crate::polyfun::PolynomialFunction;
use crate::scalar::norm;

use super::oracle::quadratic_oracle;
use super::run::{ScenarioRun, StartOutcome};
use super::{Check, CrossingCase, Scenario};

/// Radii at which trajectories are compared with the quadratic closed form.
const ORACLE_RADII: [f64; 3] = [1e-2, 1e-4, 1e-6];
/// Tolerance on `|raw − l̂|` for homogeneous `f`.
const EXACT_EXPONENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub criterion: String,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Folds per-start verdicts into one outcome; `measure` returns `Ok(None)`
/// for starts the check does not apply to.
fn per_start<F>(run: &ScenarioRun, mut measure: F) -> (bool, String)
where
    F: FnMut(&StartOutcome) -> Result<Option<(bool, String)>, String>,
{
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut last = String::new();
    for st in &run.starts {
        match measure(st) {
            Ok(None) => {}
            Ok(Some((ok, msg))) => {
                checked += 1;
                if !ok {
                    failures.push(format!("start {} {:?}: {msg}", st.index, st.start));
                }
                last = msg;
            }
            Err(msg) => failures.push(format!("start {} {:?}: {msg}", st.index, st.start)),
        }
    }
    if !failures.is_empty() {
        (false, failures.join("; "))
    } else if checked == 0 {
        (false, "no start this check applies to".into())
    } else {
        (true, format!("{checked} starts; last: {last}"))
    }
}

fn record(st: &StartOutcome) -> Result<&TrajectoryRecord, String> {
    st.record.as_ref().ok_or_else(|| format!("no trajectory ({})", st.errors.join(", ")))
}

fn quadratic_oracle_check(run: &ScenarioRun, a: f64, tol: f64) -> (bool, String) {
    per_start(run, |st| {
        let rec = record(st)?;
        if st.start.len() != 2 {
            return Ok(None);
        }
        let x0 = [st.start[0], st.start[1]];
        let mut worst: f64 = 0.0;
        for &target in &ORACLE_RADII {
            if rec.last().r > target * 1.01 {
                return Ok(Some((false, format!("trajectory stopped at r = {:e}", rec.last().r))));
            }
            let smp = rec
                .samples
                .iter()
                .min_by(|p, q| (p.r / target).ln().abs().total_cmp(&(q.r / target).ln().abs()))
                .expect("non-empty record");
            let o = quadratic_oracle(a, x0, smp.r).map_err(|e| e.to_string())?;
            for (xi, oi) in smp.x.iter().zip(o.x) {
                let e = if oi == 0.0 { xi.abs() / smp.r } else { ((xi - oi) / oi).abs() };
                worst = worst.max(e);
            }
        }
        Ok(Some((worst <= tol, format!("worst componentwise relative error {worst:.3e}"))))
    })
}

fn half_pi_check(sc: &Scenario, run: &ScenarioRun) -> (bool, String) {
    let mut lengths = Vec::new();
    for st in &run.starts {
        match record(st) {
            Ok(r) => lengths.push(r.spherical_length()),
            Err(e) => return (false, format!("start {}: {e}", st.index)),
        }
    }
    let max = lengths.iter().copied().fold(0.0, f64::max);
    let bound = FRAC_PI_2 * (1.0 + 1e-6);
    let under = lengths.iter().all(|&s| s <= bound);
    let (near, need) = match sc.angle_gap {
        Some(gap) => {
            let need = 0.9 * (FRAC_PI_2 - gap);
            (max >= need, format!(", needs max >= {need:.6}"))
        }
        None => (true, String::new()),
    };
    (under && near, format!("max spherical length {max:.9} over {} starts (bound pi/2){need}", lengths.len()))
}

fn crossing_case(sc: &Scenario, case: &CrossingCase) -> Result<(bool, String), String> {
    let gamma = PolynomialFunction::parse_with_dimension(&case.gamma, sc.f.dimension()).map_err(|e| e.to_string())?;
    let rec = match &sc.metric {
        Some(m) => integrate_riemannian(&sc.f, m, &case.start, &sc.integrator),
        None => integrate_trajectory(&sc.f, &case.start, &sc.integrator),
    }
    .map_err(|e| e.to_string())?;
    let got = crossing_count(&rec, &gamma);
    let want = case.expected_crossings();
    Ok((got == want, format!("from {:?} against {}: {:?} (expected {:?})", case.start, case.gamma, got, want)))
}

fn evaluate(sc: &Scenario, run: &ScenarioRun, check: &Check) -> (bool, String) {
    match check {
        Check::QuadraticOracle { a, tol } => quadratic_oracle_check(run, *a, *tol),
        Check::HalfPiBound => half_pi_check(sc, run),
        Check::LogLaw { slope, .. } => match &run.polar {
            Some(Ok(p)) => match p.log_slope {
                Some(m) => (
                    slope[0] <= m && m <= slope[1],
                    format!("slope {m:.6} from {} points, accepted [{}, {}]", p.fit_points, slope[0], slope[1]),
                ),
                None => (false, "too few polar samples in the fit range".into()),
            },
            Some(Err(e)) => (false, format!("polar integration failed: {e}")),
            None => (false, "no polar run".into()),
        },
        Check::CharacteristicExponent { l, exact } => per_start(run, |st| {
            let rep = st.exponent.as_ref().ok_or_else(|| format!("no estimate ({})", st.errors.join(", ")))?;
            let dev = (rep.raw_limit - crate::exponents::rational::to_f64(*l)).abs();
            let ok = rep.l_hat == *l && (!exact || dev <= EXACT_EXPONENT_TOL);
            Ok(Some((ok, format!("l_hat {} raw {:.15} deviation {dev:.2e}", rep.l_hat, rep.raw_limit))))
        }),
        Check::CriticalValue { tol } => per_start(run, |st| {
            let Some(want) = st.expected_a else { return Ok(None) };
            let rep = st.critical.as_ref().ok_or_else(|| format!("no estimate ({})", st.errors.join(", ")))?;
            let err = (rep.a - want).abs();
            Ok(Some((err <= *tol, format!("a {:.9} expected {want:.9} error {err:.2e}", rep.a))))
        }),
        Check::ControlMonotone { tail_fraction } => per_start(run, |st| {
            let series = st.series.as_ref().ok_or_else(|| format!("no control series ({})", st.errors.join(", ")))?;
            let v = verify_monotone(&series.tail(*tail_fraction), Monitored::G);
            Ok(Some((v.count == 0, format!("{} decreases of g, worst {:.2e}", v.count, v.worst))))
        }),
        Check::EnergyIdentity { tol } => per_start(run, |st| {
            let res = record(st)?.energy_residual();
            Ok(Some((res <= *tol, format!("relative residual {res:.2e}"))))
        }),
        Check::SigmaRatio { band } => per_start(run, |st| {
            let d = st.diagnostics.as_ref().ok_or_else(|| format!("no diagnostics ({})", st.errors.join(", ")))?;
            let [lo, hi] = d.sigma_ratio_final;
            Ok(Some((band[0] <= lo && hi <= band[1], format!("sigma/r in [{lo:.6}, {hi:.6}]"))))
        }),
        Check::Lojasiewicz { rho, rho_fixed, c_min, bochnak } => {
            let f = &run.function;
            match (&f.lojasiewicz, f.constant_at, &f.bochnak) {
                (Some(lj), Some((_, c)), Some(b)) => {
                    let ok = rho[0] <= lj.rho
                        && lj.rho <= rho[1]
                        && c >= *c_min
                        && bochnak[0] <= b.c_f
                        && b.c_f <= bochnak[1];
                    (ok, format!("rho {:.4}, c at rho={rho_fixed} {c:.6} (min {c_min:.6}), c_f {:.6}", lj.rho, b.c_f))
                }
                _ => (false, format!("estimates missing: {}", f.errors.join(", "))),
            }
        }
        Check::Crossings { cases } => {
            let mut ok = true;
            let mut parts = Vec::new();
            for case in cases {
                match crossing_case(sc, case) {
                    Ok((pass, msg)) => {
                        ok &= pass;
                        parts.push(msg);
                    }
                    Err(e) => {
                        ok = false;
                        parts.push(format!("{}: {e}", case.gamma));
                    }
                }
            }
            (ok, parts.join("; "))
        }
        Check::RegionAttribution => per_start(run, |st| {
            let d = st.diagnostics.as_ref().ok_or_else(|| format!("no diagnostics ({})", st.errors.join(", ")))?;
            let v = &d.f_monotone;
            Ok(Some((v.unpermitted == 0, format!("{} F-decreases, {} outside permitted regions", v.count, v.unpermitted))))
        }),
        Check::SecantConvergence { radii, tol } => per_start(run, |st| {
            let rec = record(st)?;
            let (Some(u), Some(v)) = (rec.direction_at_radius(radii[0]), rec.direction_at_radius(radii[1])) else {
                return Ok(Some((false, format!("trajectory stopped at r = {:e}", rec.last().r))));
            };
            let d: Vec<f64> = u.iter().zip(&v).map(|(p, q)| p - q).collect();
            let diff = norm(&d);
            Ok(Some((diff < *tol, format!("secant change {diff:.2e}"))))
        }),
        Check::ClosedFormCurve { exponent, tol } => per_start(run, |st| {
            let (x0, y0) = (st.start[0], st.start[1]);
            if x0 == 0.0 || y0 == 0.0 {
                return Ok(None);
            }
            let rec = record(st)?;
            let worst = rec
                .samples
                .iter()
                .map(|s| {
                    let want = y0 * (s.x[0] / x0).powf(*exponent);
                    ((s.x[1] - want) / want).abs()
                })
                .fold(0.0, f64::max);
            Ok(Some((worst <= *tol, format!("worst relative deviation {worst:.2e}"))))
        }),
    }
}

/// One outcome per check, in the scenario's order.
pub fn evaluate_checks(sc: &Scenario, run: &ScenarioRun) -> Vec<CheckOutcome> {
    sc.checks
        .iter()
        .map(|c| {
            let (pass, detail) = evaluate(sc, run, c);
            CheckOutcome { criterion: c.criterion().into(), name: c.name().into(), pass, detail }
        })
        .collect()
}
