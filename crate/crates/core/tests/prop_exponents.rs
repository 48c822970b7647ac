mod common;

use gradflow::exponents::rational::{convergents, format_ratio, parse_ratio, rationalize, to_f64};
use gradflow::exponents::{
    classify_split, constant_for, estimate_bochnak_constant, fit_envelope, ControlParams, PointSource, Region,
    ShellSampler,
};
use gradflow::polyfun::PolynomialFunction;
use num_rational::Rational64;
use proptest::prelude::*;

use common::{config, polynomial_text};

/// Quadratic-plus-cubic functions with a strict maximum at the origin.
fn peaked() -> impl Strategy<Value = PolynomialFunction> {
    (1i64..=8, 1i64..=8, -5i64..=5, -5i64..=5).prop_map(|(p, q, c1, c2)| {
        let text = format!("-{p}/2*x1^2 - {q}/2*x2^2 {c1:+}/3*x1^3 {c2:+}/3*x1*x2^2");
        PolynomialFunction::parse(&text).unwrap()
    })
}

/// `(angle, r)` with angles crowding the axes and `r` log-uniform.
fn polar_point() -> impl Strategy<Value = (f64, f64)> {
    (0.0f64..8.0, prop_oneof![Just(0.0), Just(std::f64::consts::FRAC_PI_2)], -1i32..=1, 0.0f64..1.0)
        .prop_map(|(k, base, sign, t)| (base + sign as f64 * 10f64.powf(-k), t))
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn region_labels_nest(
        f in peaked(),
        (angle, t) in polar_point(),
        omega in 0.2f64..1.0,
        c_f in 0.5f64..4.0,
        l in 1i64..=4,
    ) {
        let mut p = ControlParams::new(Rational64::from_integer(l), -0.5);
        p.set_omega(omega);
        p.set_eps_from(c_f, 0.5);
        p.lower_exponents = (1..l).map(Rational64::from_integer).collect();
        p.validate().unwrap();
        // below this radius r^-η ≥ ε
        let r_top = 1f64.min(p.eps.powf(1.0 / p.eta));
        let r = r_top * 10f64.powf(-8.0 * t) * 0.999;
        let x = [r * angle.cos(), r * angle.sin()];
        let split = f.gradient_split(&x).unwrap();
        let v = f.evaluate(&x).unwrap();
        let lab = classify_split(v, &split, &p);
        let m = lab.member;
        prop_assert!(!m.w_minus_omega || m.w_minus_eta);
        prop_assert!(!m.w_minus_eta || m.w_eps_l);
        prop_assert!(!m.w_eps_l || m.w_eps);
        prop_assert!(!m.w_eps_lower || m.w_eps);
        // the defining inequalities themselves, away from ties
        let (rad, sph) = (split.radial.abs(), split.spherical_norm);
        if v != 0.0 && r.powf(-p.eta) * sph < rad * (1.0 - 1e-9) {
            prop_assert!(m.w_eps);
        }
        if m.w_minus_omega {
            prop_assert!(r.powf(-p.omega) * sph <= rad * (1.0 + 1e-9));
        }
        // the primary label is the most specific member
        let first = lab.all().first().copied().unwrap_or(Region::Outside);
        prop_assert_eq!(lab.primary, first);
    }

    #[test]
    fn rationalization_fixes_exact_rationals(p in -500i64..=500, q in 1i64..=64) {
        let exact = Rational64::new(p, q);
        let x = to_f64(exact);
        let r = rationalize(x, 1e-12, 64).unwrap();
        prop_assert_eq!(r.value, exact);
        prop_assert!(r.within_tolerance);
        // and rationalizing the result again changes nothing
        let again = rationalize(to_f64(r.value), 1e-12, 64).unwrap();
        prop_assert_eq!(again.value, r.value);
        prop_assert_eq!(*convergents(x, 64).last().unwrap(), exact);
        prop_assert_eq!(parse_ratio(&format_ratio(exact)).unwrap(), exact);
    }

    #[test]
    fn envelope_constant_holds_on_every_pair(
        pairs in proptest::collection::vec((-40.0f64..0.0, -40.0f64..5.0), 2..200)
    ) {
        let est = fit_envelope(&pairs);
        prop_assume!(!est.insufficient_data);
        let ln_c = est.c.ln();
        for &(x, y) in &pairs {
            prop_assert!(y >= ln_c + est.rho * x - 1e-9 * (1.0 + y.abs()), "pair ({x}, {y}) under the envelope");
        }
        // the constant is sharp: some pair touches it
        let c = constant_for(&pairs, est.rho);
        prop_assert!(((c.ln() - ln_c) / ln_c.abs().max(1.0)).abs() < 1e-12);
    }

    #[test]
    fn bochnak_constant_is_valid_and_capped(
        (dim, text) in (2usize..=3).prop_flat_map(|d| (Just(d), polynomial_text(d))),
        seed in 0u64..1000,
    ) {
        let f = PolynomialFunction::parse_with_dimension(&text, dim).unwrap();
        prop_assume!(!f.is_zero());
        let sampler = ShellSampler { r_lo: 1e-4, r_hi: 1e-1, seed };
        let Ok(est) = estimate_bochnak_constant(&f, &sampler, 64) else { return Ok(()) };
        prop_assert!(est.c_f <= f.multiplicity().unwrap() as f64);
        for x in sampler.points(dim, 64) {
            let (v, g) = f.value_and_gradient(x.as_slice()).unwrap();
            let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            let gn = g.iter().map(|c| c * c).sum::<f64>().sqrt();
            prop_assert!(r * gn >= est.c_f * v.abs() * (1.0 - 1e-9));
        }
    }
}
