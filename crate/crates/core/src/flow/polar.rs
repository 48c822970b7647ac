//! Planar flow in polar coordinates, integrated in `u = -ln r`.
//!
//! With `f = Σ_m f_m` split into homogeneous parts and `ω = (cos θ, sin θ)`,
//! `dr/dt = Σ r^(m-1) a_m(θ)` and `dθ/dt = Σ r^(m-2) b_m(θ)` where
//! `a_m = <∇f_m(ω), ω>` and `b_m = <∇f_m(ω), ω⊥>`. Along the flow
//! `dθ/du = -Σ r^(m-m0) b_m / Σ r^(m-m0) a_m`, which stays O(1) as `r → 0`.

use crate::polyfun::{PolyError, PolynomialFunction};

use super::rk::{Dopri5, StepControl};
use super::{FlowError, IntegratorConfig, Termination};

#[derive(Debug, Clone)]
pub struct PolarScenario2D {
    /// `(m, f_m)` with degrees strictly increasing.
    components: Vec<(u32, PolynomialFunction)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarSample {
    pub r: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarTrajectory {
    pub samples: Vec<PolarSample>,
    pub termination: Termination,
}

impl PolarTrajectory {
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|p| vec![p.r * p.theta.cos(), p.r * p.theta.sin()])
            .collect()
    }
}

impl PolarScenario2D {
    pub fn new(f: &PolynomialFunction) -> Result<Self, PolyError> {
        if f.dimension() != 2 {
            return Err(PolyError::DimensionMismatch { expected: 2, got: f.dimension() });
        }
        let components = f.homogeneous_components();
        if components.is_empty() {
            return Err(PolyError::ZeroPolynomial);
        }
        Ok(PolarScenario2D { components })
    }

    pub fn lowest_degree(&self) -> u32 {
        self.components[0].0
    }

    fn parts(&self, theta: f64) -> impl Iterator<Item = (u32, f64, f64)> + '_ {
        let (s, c) = theta.sin_cos();
        self.components.iter().map(move |(m, fm)| {
            let g = fm.gradient(&[c, s]).expect("dimension checked");
            (*m, g[0] * c + g[1] * s, -g[0] * s + g[1] * c)
        })
    }

    pub fn dr_dt(&self, r: f64, theta: f64) -> f64 {
        self.parts(theta).map(|(m, a, _)| r.powi(m as i32 - 1) * a).sum()
    }

    pub fn dtheta_dt(&self, r: f64, theta: f64) -> f64 {
        self.parts(theta).map(|(m, _, b)| r.powi(m as i32 - 2) * b).sum()
    }

    /// `(dr/dt, dθ/dt)` with the common factor `r^(m0-1)` removed from both
    /// and `dθ/dt` multiplied by `r`.
    fn scaled_rates(&self, r: f64, theta: f64) -> (f64, f64) {
        let m0 = self.lowest_degree() as i32;
        self.parts(theta).fold((0.0, 0.0), |(ra, rb), (m, a, b)| {
            let w = r.powi(m as i32 - m0);
            (ra + w * a, rb + w * b)
        })
    }

    /// `dθ/du`, or `None` where `dr/dt >= 0` (the flow does not approach 0).
    pub fn dtheta_du(&self, u: f64, theta: f64) -> Option<f64> {
        let (a, b) = self.scaled_rates((-u).exp(), theta);
        if a < 0.0 {
            Some(-b / a)
        } else {
            None
        }
    }
}

/// Integrates `θ(u)` from `r0` down to `cfg.r_min`, one sample per accepted step.
/// Steps in `u` are capped at `cfg.step_fraction`, i.e. `|Δr| ≲ step_fraction·r`.
pub fn integrate_polar_2d(
    sc: &PolarScenario2D,
    r0: f64,
    theta0: f64,
    cfg: &IntegratorConfig,
) -> Result<PolarTrajectory, FlowError> {
    cfg.validate()?;
    if !(r0 > cfg.r_min) {
        return Err(FlowError::StartTooClose { r: r0, r_min: cfg.r_min });
    }
    let rk = Dopri5::<f64>::new();
    let mut ctrl = StepControl::default();
    let u_end = -cfg.r_min.ln();
    let mut u = -r0.ln();
    let mut theta = theta0;
    let mut samples = vec![PolarSample { r: r0, theta }];
    let h_max = cfg.step_fraction;
    let mut h = h_max;
    let mut steps = 0u64;
    // state (θ, u) with du/du = 1
    let mut field = |y: &[f64]| -> Result<Vec<f64>, ()> {
        sc.dtheta_du(y[1], y[0]).map(|v| vec![v, 1.0]).ok_or(())
    };
    let Ok(mut k) = field(&[theta, u]) else {
        return Ok(PolarTrajectory { samples, termination: Termination::LeftDomain });
    };
    loop {
        if steps >= cfg.max_steps {
            return Ok(PolarTrajectory { samples, termination: Termination::StepBudget });
        }
        h = h.min(h_max).min(u_end - u);
        let scale = |_, a: f64, b: f64| cfg.abs_tol + cfg.rel_tol * a.abs().max(b.abs());
        match rk.attempt(&[theta, u], &k, h, &mut field, scale) {
            Ok(a) if a.err <= 1.0 => {
                u += h;
                theta = a.y_new[0];
                k = a.k_end;
                steps += 1;
                if !theta.is_finite() {
                    return Err(FlowError::PrecisionExhausted { s: u, r: (-u).exp() });
                }
                let done = u >= u_end * (1.0 - 1e-15);
                let r = if done { cfg.r_min } else { (-u).exp() };
                samples.push(PolarSample { r, theta });
                if done {
                    return Ok(PolarTrajectory { samples, termination: Termination::ReachedRMin });
                }
                h *= ctrl.accept(a.err);
            }
            Ok(a) => h *= ctrl.reject(a.err),
            Err(()) => {
                // a stage left the approaching region; retry smaller, give up at roundoff scale
                h *= ctrl.min_factor;
                if h < 1e-14 * u.abs().max(1.0) {
                    return Ok(PolarTrajectory { samples, termination: Termination::LeftDomain });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example85() -> PolynomialFunction {
        PolynomialFunction::parse("-1/4*x1^4 - 1/2*x1^2*x2^2 - 1/4*x2^4 - 1/3*x1*x2^3").unwrap()
    }

    #[test]
    fn rates_agree_with_cartesian_gradient() {
        let f = PolynomialFunction::parse("-1/2*x1^2 - 1*x2^2 + 1/3*x1^3 - 1/5*x1*x2^4").unwrap();
        let sc = PolarScenario2D::new(&f).unwrap();
        for i in 0..100 {
            let r = 0.01 + 0.005 * i as f64;
            let th = 0.37 * i as f64;
            let (s, c) = th.sin_cos();
            let g = f.gradient(&[r * c, r * s]).unwrap();
            let dr = g[0] * c + g[1] * s;
            let dth = (-g[0] * s + g[1] * c) / r;
            assert!((sc.dr_dt(r, th) - dr).abs() <= 1e-10 * dr.abs().max(1e-300));
            assert!((sc.dtheta_dt(r, th) - dth).abs() <= 1e-10 * dth.abs().max(1e-12));
        }
    }

    #[test]
    fn example85_angular_field() {
        let sc = PolarScenario2D::new(&example85()).unwrap();
        for &th in &[0.1, 0.3, 1.0, 2.0] {
            let (s, c) = f64::sin_cos(th);
            let expected = -(c * c * s * s - s.powi(4) / 3.0) / (1.0 + 4.0 / 3.0 * c * s.powi(3));
            let got = sc.dtheta_du(5.0, th).unwrap();
            assert!((got - expected).abs() < 1e-14, "{th}: {got} vs {expected}");
        }
    }

    #[test]
    fn example85_reaches_tiny_radius() {
        let sc = PolarScenario2D::new(&example85()).unwrap();
        let mut cfg = IntegratorConfig::default();
        cfg.r_min = 1e-12;
        let tr = integrate_polar_2d(&sc, 0.1, 0.3, &cfg).unwrap();
        assert_eq!(tr.termination, Termination::ReachedRMin);
        let last = tr.samples.last().unwrap();
        assert_eq!(last.r, 1e-12);
        let u = -last.r.ln();
        // 1/θ grows like u: the product θu is within a modest factor of 1
        assert!((0.5..1.5).contains(&(last.theta * u)), "{}", last.theta * u);
        assert!(tr.samples.windows(2).all(|w| w[1].theta < w[0].theta));
    }

    #[test]
    fn quadratic_angle_decreases_to_zero() {
        let f = PolynomialFunction::parse("-1/2*x1^2 - 1*x2^2").unwrap();
        let sc = PolarScenario2D::new(&f).unwrap();
        let tr = integrate_polar_2d(&sc, 1.0, 1.2, &IntegratorConfig::default()).unwrap();
        assert!(tr.samples.windows(2).all(|w| w[1].theta <= w[0].theta));
        let last = tr.samples.last().unwrap().theta;
        // tan θ = tan θ0 · r^(a-1) along y = c x^a, up to the angle scale
        assert!(last > 0.0 && last < 1e-9);
    }

    #[test]
    fn equilibrium_angle_is_kept() {
        let sc = PolarScenario2D::new(&example85()).unwrap();
        let tr = integrate_polar_2d(&sc, 0.5, 0.0, &IntegratorConfig::default()).unwrap();
        assert!(tr.samples.iter().all(|p| p.theta == 0.0));
    }

    #[test]
    fn uphill_is_left_domain() {
        let f = PolynomialFunction::parse("1/2*x1^2 + 1/2*x2^2").unwrap();
        let sc = PolarScenario2D::new(&f).unwrap();
        let tr = integrate_polar_2d(&sc, 0.5, 0.3, &IntegratorConfig::default()).unwrap();
        assert_eq!(tr.termination, Termination::LeftDomain);
        assert_eq!(tr.samples.len(), 1);
    }
}
