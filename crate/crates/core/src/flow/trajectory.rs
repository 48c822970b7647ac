use crate::polyfun::{GradientSplit, MetricField, PolyError, PolynomialFunction};
use crate::scalar::{dot, norm, DoubleDouble, Precision, Scalar};

use super::rk::{Dopri5, StepControl};
use super::{FlowError, IntegratorConfig, Termination, TrajectoryRecord, TrajectorySample};

/// Radius below which a binary64 run may promote itself.
const AUTO_EXTEND_RADIUS: f64 = 1e-7;
/// Promotion threshold on `|Δf|/|f|` per step, in units of binary64 roundoff.
const AUTO_EXTEND_SPREAD: f64 = 1e3;

struct Ctx<'a> {
    f: &'a PolynomialFunction,
    metric: Option<&'a MetricField>,
    cfg: &'a IntegratorConfig,
}

enum FieldFault {
    Vanished,
    NonFinite,
    Metric,
    Poly(PolyError),
}

impl<'a> Ctx<'a> {
    /// Direction of motion before normalization: `∇f` or `G⁻¹∇f`.
    fn direction<S: Scalar>(&self, x: &[S], grad: &[S]) -> Result<Vec<S>, FieldFault> {
        match self.metric {
            None => Ok(grad.to_vec()),
            Some(g) => g.solve(x, grad).map_err(|e| match e {
                PolyError::NotPositiveDefinite => FieldFault::Metric,
                other => FieldFault::Poly(other),
            }),
        }
    }

    fn velocity<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>, FieldFault> {
        let grad = self.f.gradient(x).map_err(FieldFault::Poly)?;
        let w = self.direction(x, &grad)?;
        let n = norm(&w);
        if !n.is_finite() {
            return Err(FieldFault::NonFinite);
        }
        if n == S::zero() {
            return Err(FieldFault::Vanished);
        }
        Ok(w.into_iter().map(|c| c / n).collect())
    }

    fn observe<S: Scalar>(&self, x: &[S]) -> Result<Observation, FieldFault> {
        let (f_val, grad) = self.f.value_and_gradient(x).map_err(FieldFault::Poly)?;
        let split = GradientSplit::from_gradient(x, grad.clone()).map_err(FieldFault::Poly)?;
        let w = self.direction(x, &grad)?;
        let wn = norm(&w);
        let r = split.r;
        let (df_ds, dr_ds, rate) = if wn == S::zero() {
            (S::zero(), S::zero(), S::zero())
        } else {
            let v: Vec<S> = w.iter().map(|&c| c / wn).collect();
            let df_ds = dot(&grad, &v);
            let dr_ds = dot(&v, x) / r;
            // |x ∧ v| / r^2 without forming v - <v, x̂> x̂
            let mut acc = S::zero();
            for i in 0..x.len() {
                for j in (i + 1)..x.len() {
                    let c = x[i] * v[j] - x[j] * v[i];
                    acc += c * c;
                }
            }
            (df_ds, dr_ds, acc.sqrt() / (r * r))
        };
        let obs = Observation {
            x: x.iter().map(|v| v.to_f64()).collect(),
            r: r.to_f64(),
            f_val: f_val.to_f64(),
            grad_norm: split.grad_norm().to_f64(),
            split: split.to_f64(),
            df_ds: df_ds.to_f64(),
            dr_ds: dr_ds.to_f64(),
            rate: rate.to_f64(),
        };
        let finite = obs.x.iter().all(|v| v.is_finite())
            && obs.f_val.is_finite()
            && obs.grad_norm.is_finite()
            && obs.rate.is_finite();
        if finite {
            Ok(obs)
        } else {
            Err(FieldFault::NonFinite)
        }
    }

    fn fault(&self, fault: FieldFault, s: f64, x: &[f64]) -> FlowError {
        match fault {
            FieldFault::Vanished | FieldFault::NonFinite => {
                FlowError::PrecisionExhausted { s, r: norm(x) }
            }
            FieldFault::Metric => FlowError::MetricDegenerate(x.to_vec()),
            FieldFault::Poly(e) => FlowError::Poly(e),
        }
    }
}

#[derive(Debug, Clone)]
struct Observation {
    x: Vec<f64>,
    r: f64,
    f_val: f64,
    grad_norm: f64,
    split: GradientSplit<f64>,
    df_ds: f64,
    dr_ds: f64,
    rate: f64,
}

struct Run {
    samples: Vec<TrajectorySample>,
    s: DoubleDouble,
    s_tilde: DoubleDouble,
    /// Increments since the last recorded sample.
    pending_ds: DoubleDouble,
    pending_dt: DoubleDouble,
    since_sample: usize,
    prev: Observation,
    h: f64,
    escape_radius: f64,
    steps_accepted: u64,
    steps_rejected: u64,
    f_monotone_ok: bool,
    precision_switch: Option<usize>,
}

impl Run {
    fn push(&mut self, obs: &Observation, grad_min: f64) {
        if let Some(last) = self.samples.last() {
            if last.split.grad_norm() > grad_min && obs.f_val <= last.f_val {
                self.f_monotone_ok = false;
            }
        }
        self.samples.push(TrajectorySample {
            s: self.s.to_f64(),
            ds: self.pending_ds.to_f64(),
            x: obs.x.clone(),
            r: obs.r,
            f_val: obs.f_val,
            split: obs.split.clone(),
            s_tilde: self.s_tilde.to_f64(),
            ds_tilde: self.pending_dt.to_f64(),
            df_ds: obs.df_ds,
            dr_ds: obs.dr_ds,
            sphere_rate: obs.rate,
            s_to_end: 0.0,
            s_tilde_to_end: 0.0,
        });
        self.pending_ds = DoubleDouble::ZERO;
        self.pending_dt = DoubleDouble::ZERO;
        self.since_sample = 0;
    }
}

enum Outcome {
    Done(Termination),
    Promote(Vec<f64>),
}

fn drive<S: Scalar>(ctx: &Ctx, run: &mut Run, x0: &[f64], may_promote: bool) -> Result<Outcome, FlowError> {
    let cfg = ctx.cfg;
    let rk = Dopri5::<S>::new();
    let mut ctrl = StepControl::default();
    let mut x: Vec<S> = x0.iter().map(|&v| S::from_f64(v)).collect();
    let mut k = ctx
        .velocity(&x)
        .map_err(|e| ctx.fault(e, run.s.to_f64(), x0))?;
    let (abs_tol, rel_tol) = (cfg.abs_tol, cfg.rel_tol);
    loop {
        if run.steps_accepted >= cfg.max_steps {
            return Ok(Outcome::Done(Termination::StepBudget));
        }
        let r = run.prev.r;
        let h_max = cfg.step_fraction * r;
        run.h = run.h.min(h_max);
        if run.h < 64.0 * S::EPSILON * r {
            return Err(FlowError::StepUnderflow { s: run.s.to_f64(), r });
        }
        let h = S::from_f64(run.h);
        let mut field = |y: &[S]| ctx.velocity(y);
        let scale = |_, a: S, b: S| abs_tol * r + rel_tol * a.abs().to_f64().max(b.abs().to_f64());
        let attempt = match rk.attempt(&x, &k, h, &mut field, scale) {
            Ok(a) if a.err <= 1.0 => a,
            Ok(a) => {
                run.steps_rejected += 1;
                run.h *= ctrl.reject(a.err);
                continue;
            }
            Err(FieldFault::Vanished | FieldFault::NonFinite) => {
                run.steps_rejected += 1;
                run.h *= ctrl.min_factor;
                continue;
            }
            Err(e) => return Err(ctx.fault(e, run.s.to_f64(), &run.prev.x)),
        };
        let obs = ctx
            .observe(&attempt.y_new)
            .map_err(|e| ctx.fault(e, run.s.to_f64(), &run.prev.x))?;
        let hd = DoubleDouble::from_f64(run.h);
        let dt = DoubleDouble::from_f64(0.5 * (run.prev.rate + obs.rate)) * hd;
        run.s += hd;
        run.s_tilde += dt;
        run.pending_ds += hd;
        run.pending_dt += dt;
        run.steps_accepted += 1;
        run.since_sample += 1;
        run.h *= ctrl.accept(attempt.err);

        let termination = if obs.grad_norm <= cfg.grad_min {
            Some(Termination::GradientVanished)
        } else if obs.r <= cfg.r_min {
            Some(Termination::ReachedRMin)
        } else if obs.r > run.escape_radius {
            Some(Termination::LeftDomain)
        } else {
            None
        };
        let promote = may_promote
            && S::PRECISION == Precision::Double
            && termination.is_none()
            && obs.r < AUTO_EXTEND_RADIUS
            && (obs.f_val - run.prev.f_val).abs() < AUTO_EXTEND_SPREAD * f64::EPSILON * obs.f_val.abs();
        if termination.is_some() || promote || run.since_sample >= cfg.sample_stride {
            run.push(&obs, cfg.grad_min);
        }
        run.prev = obs;
        if let Some(t) = termination {
            return Ok(Outcome::Done(t));
        }
        if promote {
            return Ok(Outcome::Promote(run.prev.x.clone()));
        }
        x = attempt.y_new;
        k = attempt.k_end;
    }
}

fn integrate(
    f: &PolynomialFunction,
    metric: Option<&MetricField>,
    x0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<TrajectoryRecord, FlowError> {
    cfg.validate()?;
    if x0.len() != f.dimension() {
        return Err(PolyError::DimensionMismatch { expected: f.dimension(), got: x0.len() }.into());
    }
    if let Some(g) = metric {
        if g.dimension() != f.dimension() {
            return Err(PolyError::DimensionMismatch { expected: f.dimension(), got: g.dimension() }.into());
        }
    }
    let ctx = Ctx { f, metric, cfg };
    let r0 = norm(x0);
    if !(r0 > cfg.r_min) {
        return Err(FlowError::StartTooClose { r: r0, r_min: cfg.r_min });
    }
    let start = match cfg.precision {
        Precision::Double => ctx.observe(x0),
        Precision::Extended => {
            let xd: Vec<DoubleDouble> = x0.iter().map(|&v| DoubleDouble::from_f64(v)).collect();
            ctx.observe(&xd)
        }
    }
    .map_err(|e| ctx.fault(e, 0.0, x0))?;
    if !(start.grad_norm > cfg.grad_min) {
        return Err(FlowError::VanishingGradientAtStart(start.grad_norm));
    }
    let mut run = Run {
        samples: Vec::new(),
        s: DoubleDouble::ZERO,
        s_tilde: DoubleDouble::ZERO,
        pending_ds: DoubleDouble::ZERO,
        pending_dt: DoubleDouble::ZERO,
        since_sample: 0,
        prev: start.clone(),
        h: cfg.step_fraction * r0,
        escape_radius: cfg.escape_factor * r0,
        steps_accepted: 0,
        steps_rejected: 0,
        f_monotone_ok: true,
        precision_switch: None,
    };
    run.push(&start, cfg.grad_min);

    let termination = match cfg.precision {
        Precision::Extended => match drive::<DoubleDouble>(&ctx, &mut run, x0, false)? {
            Outcome::Done(t) => t,
            Outcome::Promote(_) => unreachable!("promotion only from binary64"),
        },
        Precision::Double => match drive::<f64>(&ctx, &mut run, x0, cfg.auto_extend)? {
            Outcome::Done(t) => t,
            Outcome::Promote(x) => {
                run.precision_switch = Some(run.samples.len());
                match drive::<DoubleDouble>(&ctx, &mut run, &x, false)? {
                    Outcome::Done(t) => t,
                    Outcome::Promote(_) => unreachable!("promotion only from binary64"),
                }
            }
        },
    };
    let mut rec = TrajectoryRecord {
        samples: run.samples,
        termination,
        f_monotone_ok: run.f_monotone_ok,
        steps_accepted: run.steps_accepted,
        steps_rejected: run.steps_rejected,
        precision_switch: run.precision_switch,
        riemannian: metric.is_some(),
    };
    rec.finish_suffix_sums();
    Ok(rec)
}

/// Euclidean unit-speed gradient flow from `x0` toward the origin.
pub fn integrate_trajectory(
    f: &PolynomialFunction,
    x0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<TrajectoryRecord, FlowError> {
    integrate(f, None, x0, cfg)
}

/// Flow along `G⁻¹∇f` normalized to unit Euclidean speed.
pub fn integrate_riemannian(
    f: &PolynomialFunction,
    metric: &MetricField,
    x0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<TrajectoryRecord, FlowError> {
    integrate(f, Some(metric), x0, cfg)
}

/// Rebuilds a record from stored `(s, x)` pairs, re-evaluating every
/// geometric quantity. Spherical length is re-accumulated by trapezoid.
pub fn record_from_points(
    f: &PolynomialFunction,
    metric: Option<&MetricField>,
    points: &[(f64, Vec<f64>)],
    termination: Termination,
) -> Result<TrajectoryRecord, FlowError> {
    let cfg = IntegratorConfig::default();
    let ctx = Ctx { f, metric, cfg: &cfg };
    let mut samples: Vec<TrajectorySample> = Vec::with_capacity(points.len());
    let mut s_tilde = 0.0;
    let mut f_monotone_ok = true;
    for (s, x) in points {
        if x.len() != f.dimension() {
            return Err(PolyError::DimensionMismatch { expected: f.dimension(), got: x.len() }.into());
        }
        let obs = ctx.observe(x.as_slice()).map_err(|e| ctx.fault(e, *s, x))?;
        let (ds, dt) = match samples.last() {
            Some(p) => {
                let ds = s - p.s;
                if !(ds > 0.0) {
                    return Err(FlowError::Config(format!("arc length not increasing at s = {s}")));
                }
                if obs.f_val <= p.f_val {
                    f_monotone_ok = false;
                }
                (ds, 0.5 * (p.sphere_rate + obs.rate) * ds)
            }
            None => (0.0, 0.0),
        };
        s_tilde += dt;
        samples.push(TrajectorySample {
            s: *s,
            ds,
            x: obs.x,
            r: obs.r,
            f_val: obs.f_val,
            split: obs.split,
            s_tilde,
            ds_tilde: dt,
            df_ds: obs.df_ds,
            dr_ds: obs.dr_ds,
            sphere_rate: obs.rate,
            s_to_end: 0.0,
            s_tilde_to_end: 0.0,
        });
    }
    if samples.is_empty() {
        return Err(FlowError::Config("trajectory has no samples".into()));
    }
    let mut rec = TrajectoryRecord {
        steps_accepted: samples.len() as u64 - 1,
        samples,
        termination,
        f_monotone_ok,
        steps_rejected: 0,
        precision_switch: None,
        riemannian: metric.is_some(),
    };
    rec.finish_suffix_sums();
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyfun::rational;

    fn quad(a: &str) -> PolynomialFunction {
        PolynomialFunction::parse(&format!("-1/2*x1^2 - {a}*x2^2")).unwrap()
    }

    #[test]
    fn quadratic_follows_parabola() {
        // f = -(x^2 + 2y^2)/2: x = e^-t, y = e^-2t, so y = x^2 from (1,1)
        let f = quad("1");
        let mut cfg = IntegratorConfig::default();
        cfg.r_min = 1e-8;
        let rec = integrate_trajectory(&f, &[1.0, 1.0], &cfg).unwrap();
        assert_eq!(rec.termination, Termination::ReachedRMin);
        assert!(rec.f_monotone_ok);
        for s in &rec.samples {
            let rel = (s.x[1] - s.x[0] * s.x[0]).abs() / (s.x[0] * s.x[0]);
            assert!(rel < 1e-6, "rel {rel} at r = {}", s.r);
        }
        let d = rec.terminal_direction();
        assert!((d[0] - 1.0).abs() < 1e-6 && d[1].abs() < 1e-6);
    }

    #[test]
    fn axis_start_stays_on_axis() {
        let f = quad("1");
        let rec = integrate_trajectory(&f, &[0.0, 1.0], &IntegratorConfig::default()).unwrap();
        assert!(rec.samples.iter().all(|s| s.x[0] == 0.0));
        assert_eq!(rec.spherical_length(), 0.0);
    }

    #[test]
    fn radial_flow_has_unit_speed() {
        let f = PolynomialFunction::parse("-1/2*x1^2 - 1/2*x2^2").unwrap();
        let x0 = [0.3, -0.4];
        let cfg = IntegratorConfig::default();
        let rec = integrate_trajectory(&f, &x0, &cfg).unwrap();
        let s_end = rec.last().s;
        let expected = 0.5 - rec.last().r;
        assert!(((s_end - expected) / expected).abs() < 1e-8);
        assert!(((s_end - (0.5 - cfg.r_min)) / s_end).abs() < 1e-3);
        assert!(rec.spherical_length() < 1e-12);
    }

    #[test]
    fn arc_length_matches_chord_sum() {
        let f = quad("1");
        let rec = integrate_trajectory(&f, &[1.0, 1.0], &IntegratorConfig::default()).unwrap();
        let chords: f64 = rec
            .samples
            .windows(2)
            .map(|w| ((w[1].x[0] - w[0].x[0]).powi(2) + (w[1].x[1] - w[0].x[1]).powi(2)).sqrt())
            .sum();
        assert!(((chords - rec.last().s) / rec.last().s).abs() < 1e-8);
        assert!(rec.energy_residual() < 1e-6);
    }

    #[test]
    fn extended_precision_reaches_deeper() {
        let f = quad("1");
        let cfg = IntegratorConfig::for_precision(Precision::Extended);
        let rec = integrate_trajectory(&f, &[1.0, 1.0], &cfg).unwrap();
        assert_eq!(rec.termination, Termination::ReachedRMin);
        assert!(rec.last().r <= 1e-14);
        let l = rec.last();
        let rel = (l.x[1] - l.x[0] * l.x[0]).abs() / (l.x[0] * l.x[0]);
        assert!(rel < 1e-6);
    }

    #[test]
    fn identity_metric_reproduces_euclidean_record() {
        let f = quad("1");
        let cfg = IntegratorConfig::default();
        let a = integrate_trajectory(&f, &[0.6, 0.8], &cfg).unwrap();
        let b = integrate_riemannian(&f, &MetricField::identity(2), &[0.6, 0.8], &cfg).unwrap();
        assert_eq!(a.len(), b.len());
        for (p, q) in a.samples.iter().zip(&b.samples) {
            assert!((p.x[0] - q.x[0]).abs() <= 1e-10 * p.r);
            assert!((p.x[1] - q.x[1]).abs() <= 1e-10 * p.r);
        }
    }

    #[test]
    fn constant_conformal_metric_keeps_the_curve() {
        let f = quad("1");
        let cfg = IntegratorConfig::default();
        let a = integrate_trajectory(&f, &[0.6, 0.8], &cfg).unwrap();
        let g = MetricField::scaled_identity(2, rational(3, 1));
        let b = integrate_riemannian(&f, &g, &[0.6, 0.8], &cfg).unwrap();
        for (p, q) in a.samples.iter().zip(&b.samples) {
            assert!((p.x[0] - q.x[0]).abs() <= 1e-8 * p.r.max(1e-300));
            assert!((p.x[1] - q.x[1]).abs() <= 1e-8 * p.r.max(1e-300));
        }
    }

    #[test]
    fn diagonal_metric_curve() {
        // G = diag(1,4), f = -(x^2+y^2)/2: field (-x, -y/4), curve y = x^(1/4)
        let f = PolynomialFunction::parse("-1/2*x1^2 - 1/2*x2^2").unwrap();
        let g = MetricField::diagonal(vec![rational(1, 1), rational(4, 1)]);
        let rec = integrate_riemannian(&f, &g, &[1.0, 1.0], &IntegratorConfig::default()).unwrap();
        assert!(rec.riemannian);
        for s in &rec.samples {
            let rel = (s.x[1] - s.x[0].powf(0.25)).abs() / s.x[1];
            assert!(rel < 1e-5, "rel {rel} at r = {}", s.r);
        }
        assert!(rec.energy_residual() < 1e-6);
    }

    #[test]
    fn start_preconditions() {
        let f = quad("1");
        let cfg = IntegratorConfig::default();
        assert!(matches!(
            integrate_trajectory(&f, &[1e-12, 0.0], &cfg),
            Err(FlowError::StartTooClose { .. })
        ));
        let flat = PolynomialFunction::parse("-1*x1^2*x2^2").unwrap();
        assert!(matches!(
            integrate_trajectory(&flat, &[1.0, 0.0], &cfg),
            Err(FlowError::VanishingGradientAtStart(_))
        ));
        assert!(integrate_trajectory(&f, &[1.0], &cfg).is_err());
    }

    #[test]
    fn uphill_flow_leaves_domain() {
        let f = PolynomialFunction::parse("1/2*x1^2 + 1/2*x2^2").unwrap();
        let rec = integrate_trajectory(&f, &[0.1, 0.0], &IntegratorConfig::default()).unwrap();
        assert_eq!(rec.termination, Termination::LeftDomain);
    }

    #[test]
    fn step_budget_and_stride() {
        let f = quad("1");
        let mut cfg = IntegratorConfig::default();
        cfg.max_steps = 100;
        cfg.sample_stride = 10;
        let rec = integrate_trajectory(&f, &[1.0, 1.0], &cfg).unwrap();
        assert_eq!(rec.termination, Termination::StepBudget);
        assert_eq!(rec.steps_accepted, 100);
        assert_eq!(rec.len(), 11);
    }

    #[test]
    fn rebuilt_record_matches() {
        let f = quad("1");
        let rec = integrate_trajectory(&f, &[1.0, 1.0], &IntegratorConfig::default()).unwrap();
        let pts: Vec<_> = rec.samples.iter().map(|s| (s.s, s.x.clone())).collect();
        let back = record_from_points(&f, None, &pts, rec.termination).unwrap();
        assert_eq!(back.len(), rec.len());
        let (a, b) = (rec.spherical_length(), back.spherical_length());
        assert!((a - b).abs() < 1e-9 * a);
    }
}
