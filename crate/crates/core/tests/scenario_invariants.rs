//! Invariants that hold per shipped scenario rather than per random case.

use std::sync::OnceLock;

use gradflow::exponents::rational::to_f64;
use gradflow::exponents::{classify_split, PointSource, ShellSampler};
use gradflow::flow::{integrate_riemannian, integrate_trajectory, IntegratorConfig, Termination, TrajectoryRecord};
use gradflow::scalar::Precision;
use gradflow::scenarios::{builtin, builtin_names, run_scenario, Scenario, ScenarioRun};

fn runs() -> &'static [(Scenario, ScenarioRun)] {
    static RUNS: OnceLock<Vec<(Scenario, ScenarioRun)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        builtin_names()
            .into_iter()
            .map(|(name, _)| {
                let sc = builtin(name).unwrap();
                let run = run_scenario(&sc).unwrap();
                (sc, run)
            })
            .collect()
    })
}

fn records(run: &ScenarioRun) -> impl Iterator<Item = &TrajectoryRecord> {
    run.starts.iter().filter_map(|s| s.record.as_ref())
}

fn integrate(sc: &Scenario, x0: &[f64], cfg: &IntegratorConfig) -> TrajectoryRecord {
    match &sc.metric {
        Some(m) => integrate_riemannian(&sc.f, m, x0, cfg).unwrap(),
        None => integrate_trajectory(&sc.f, x0, cfg).unwrap(),
    }
}

#[test]
fn every_start_yields_a_full_outcome() {
    for (sc, run) in runs() {
        assert_eq!(run.starts.len(), sc.starts.len());
        for st in &run.starts {
            assert!(st.errors.is_empty(), "{} start {:?}: {:?}", sc.name, st.start, st.errors);
            assert!(st.diagnostics.is_some());
        }
    }
}

#[test]
fn radius_decreases_on_every_tail() {
    for (sc, run) in runs() {
        for rec in records(run) {
            let n = rec.len();
            let tail = &rec.samples[n - n / 5..];
            assert!(tail.windows(2).all(|w| w[1].r < w[0].r), "{}", sc.name);
        }
    }
}

#[test]
fn lojasiewicz_length_bound_on_segments() {
    for (sc, run) in runs() {
        if sc.metric.is_some() {
            // df/ds differs from |∇f| in a metric flow
            continue;
        }
        let est = run.function.lojasiewicz.as_ref().unwrap();
        let (c, rho) = (est.c, est.rho);
        // the estimate is fitted on r ≤ 0.1
        for rec in records(run) {
            let inside: Vec<_> = rec.samples.iter().filter(|s| s.r <= 0.1).collect();
            let end = inside.last().unwrap();
            let phi = |v: f64| v.abs().powf(1.0 - rho);
            let mut worst = 0.0f64;
            for s in inside.iter().step_by(97) {
                let len = s.s_to_end;
                let bound = (phi(s.f_val) - phi(end.f_val)) / (c * (1.0 - rho));
                worst = worst.max(len / bound);
            }
            eprintln!("{}: length/bound max {worst:.4} (rho {rho:.4}, c {c:.4})", sc.name);
            assert!(worst <= 1.05, "{}: {worst}", sc.name);
        }
    }
}

#[test]
fn halving_tolerances_barely_moves_the_terminal_direction() {
    let tol = 1e-8;
    for (sc, _) in runs() {
        let coarse = IntegratorConfig { rel_tol: tol, abs_tol: tol * 1e-8, r_min: 1e-8, ..sc.integrator.clone() };
        let fine = IntegratorConfig { rel_tol: tol / 2.0, abs_tol: tol * 0.5e-8, ..coarse.clone() };
        for st in &sc.starts {
            let a = integrate(sc, &st.x, &coarse).terminal_direction();
            let b = integrate(sc, &st.x, &fine).terminal_direction();
            let d = a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            assert!(d <= 10.0 * tol, "{} from {:?}: {d:e}", sc.name, st.x);
        }
    }
}

#[test]
fn value_band_on_w_eps_points() {
    for (sc, run) in runs() {
        let params = run.starts[0].params.as_ref().unwrap();
        let l = to_f64(params.l);
        let sampler = ShellSampler { r_lo: 1e-6, r_hi: 1e-1, seed: sc.seed };
        let dim = sc.f.dimension();
        let mut band = [f64::INFINITY, 0.0f64];
        let mut kept = 0;
        for x in sampler.points(dim, 40_000) {
            let split = sc.f.gradient_split(&x).unwrap();
            let v = sc.f.evaluate(&x).unwrap();
            if !classify_split(v, &split, params).member.w_eps_l {
                continue;
            }
            let q = v.abs() / split.r.powf(l);
            band = [band[0].min(q), band[1].max(q)];
            kept += 1;
            if kept == 1000 {
                break;
            }
        }
        eprintln!("{}: {kept} points, |f|/r^l in [{:.4e}, {:.4e}]", sc.name, band[0], band[1]);
        assert_eq!(kept, 1000, "{}", sc.name);
        assert!(band[0] >= 1e-6 && band[1] <= 1e6, "{}: {band:?}", sc.name);
    }
}

#[test]
fn value_lower_bound_from_the_lojasiewicz_exponent() {
    for (sc, run) in runs() {
        let params = run.starts[0].params.as_ref().unwrap();
        let rho = run.function.lojasiewicz.as_ref().unwrap().rho;
        let p = 1.0 / (1.0 - rho);
        let dim = sc.f.dimension();
        let w_eps_values = |seed: u64| -> Vec<f64> {
            ShellSampler { r_lo: 1e-6, r_hi: 1e-1, seed }
                .points(dim, 20_000)
                .into_iter()
                .filter_map(|x| {
                    let split = sc.f.gradient_split(&x).unwrap();
                    let v = sc.f.evaluate(&x).unwrap();
                    classify_split(v, &split, params).member.w_eps.then(|| v.abs() / split.r.powf(p))
                })
                .collect()
        };
        // constant fitted on one point set, checked on another
        let c = w_eps_values(sc.seed).into_iter().fold(f64::INFINITY, f64::min);
        let fresh = w_eps_values(sc.seed + 1);
        assert!(c > 0.0 && !fresh.is_empty(), "{}", sc.name);
        let worst = fresh.iter().copied().fold(f64::INFINITY, f64::min);
        eprintln!("{}: c' {c:.4e}, fresh min {worst:.4e}", sc.name);
        assert!(worst >= c / 1.05, "{}: {worst} < {c}", sc.name);
    }
}

#[test]
fn exponent_is_at_most_the_lojasiewicz_bound() {
    for (sc, run) in runs() {
        let rho = run.function.lojasiewicz.as_ref().unwrap().rho;
        for st in &run.starts {
            let l = to_f64(st.params.as_ref().unwrap().l);
            assert!(l <= 1.0 / (1.0 - rho) + 0.05, "{}: l {l}, rho {rho}", sc.name);
        }
    }
}

#[test]
fn f_decreases_only_where_allowed() {
    for (sc, run) in runs() {
        for st in &run.starts {
            let d = st.diagnostics.as_ref().unwrap();
            assert_eq!(d.f_monotone.unpermitted, 0, "{} from {:?}", sc.name, st.start);
        }
    }
}

#[test]
fn u_l_is_entered_once() {
    for (sc, run) in runs() {
        for st in &run.starts {
            assert!(st.diagnostics.as_ref().unwrap().u_l_single_entry, "{} from {:?}", sc.name, st.start);
        }
    }
}

#[test]
fn control_growth_on_the_allowed_region() {
    for (sc, run) in runs() {
        for st in &run.starts {
            let g = &st.diagnostics.as_ref().unwrap().growth_f_allowed;
            eprintln!("{} {:?}: {g:?}", sc.name, st.start);
            if g.checked == 0 && g.nonpositive == 0 {
                // no sample with |∂_r f| ≤ r^{−η}|∇′f|: nothing to check
                continue;
            }
            assert!(g.holds() && g.c > 0.0, "{} from {:?}: {g:?}", sc.name, st.start);
        }
    }
}

#[test]
fn every_scenario_completes_in_extended_precision() {
    for (name, _) in builtin_names() {
        let mut sc = builtin(name).unwrap();
        let cfg = IntegratorConfig::for_precision(Precision::Extended);
        sc.integrator = cfg.clone();
        for st in &sc.starts {
            let rec = integrate(&sc, &st.x, &cfg);
            assert_eq!(rec.termination, Termination::ReachedRMin, "{name} from {:?}", st.x);
            assert!(rec.steps_accepted < cfg.max_steps);
        }
    }
}

#[test]
fn every_check_names_its_criterion() {
    for (sc, run) in runs() {
        assert_eq!(run.checks.len(), sc.checks.len());
        for c in &run.checks {
            let n: u32 = c.criterion.strip_prefix("AC-").unwrap().parse().unwrap();
            assert!((1..=13).contains(&n));
            assert!(c.pass, "{} {} {}: {}", sc.name, c.criterion, c.name, c.detail);
        }
    }
}
