use std::f64::consts::{PI, TAU};

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};

use crate::exponents::rational::{parse_ratio, rationalize, to_f64};
use crate::exponents::{PointSource, ShellSampler};
use crate::flow::IntegratorConfig;
use crate::polyfun::{rational, MetricField, Polynomial, PolynomialFunction};

use super::{Check, CrossingCase, Kind, PolarStart, Scenario, ScenarioError};

pub const DEFAULT_RADIUS: f64 = 0.5;
pub const DEFAULT_START_COUNT: usize = 8;

const SHIPPED: [(&str, &str); 9] = [
    ("quadratic-a2", "-1/2(x^2 + 2y^2): paths y = c x^2, tangent to the x-axis"),
    ("quadratic-a4", "-1/2(x^2 + 4y^2): spherical lengths approach pi/2 near the y-axis"),
    ("quadratic-a1/2", "-1/2(x^2 + y^2/2): paths tangent to the y-axis"),
    ("example85", "-1/4(x^2 + y^2)^2 - 1/3 x y^3: angle decays like 1/(-ln r)"),
    ("radial-2", "-r^2/2: straight rays"),
    ("radial-4", "-r^4/4: straight rays, F constant"),
    ("homogeneous3d", "-(x^4 + y^4 + z^4) - xyz(x + y + z) in three variables"),
    ("riemannian-conformal", "-1/2(x^2 + 2y^2) under G = (1 + x^2 + y^2) I"),
    ("riemannian-diag", "-1/2(x^2 + y^2) under G = diag(1, 4): paths y = c x^(1/4)"),
];

/// Shipped scenario names with one-line descriptions.
pub fn builtin_names() -> Vec<(&'static str, &'static str)> {
    SHIPPED.to_vec()
}

/// `n` points at `radius` on equally spaced angles `(k + offset)·2π/n`,
/// offset ½ with `half_offset`. Coordinates that vanish up to roundoff are exactly 0.
pub fn angle_starts(n: usize, radius: f64, half_offset: bool) -> Vec<Vec<f64>> {
    let off = if half_offset { 0.5 } else { 0.0 };
    (0..n)
        .map(|k| {
            let (s, c) = ((k as f64 + off) * TAU / n as f64).sin_cos();
            let snap = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
            vec![radius * snap(c), radius * snap(s)]
        })
        .collect()
}

/// `n` spread directions at `radius`: a Fibonacci lattice in three
/// dimensions, normalized shell samples otherwise.
pub fn sphere_starts(dim: usize, n: usize, radius: f64) -> Vec<Vec<f64>> {
    match dim {
        1 => (0..n).map(|k| vec![if k % 2 == 0 { radius } else { -radius }]).collect(),
        2 => angle_starts(n, radius, false),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let (s, c) = (golden * k as f64).sin_cos();
                    vec![radius * rho * c, radius * rho * s, radius * z]
                })
                .collect()
        }
        _ => ShellSampler::default()
            .points(dim, n)
            .into_iter()
            .map(|p| {
                let r = crate::scalar::norm(&p);
                p.iter().map(|v| radius * v / r).collect()
            })
            .collect(),
    }
}

fn big(q: Rational64) -> BigRational {
    BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

fn parse_parameter(text: &str) -> Option<Rational64> {
    if let Ok(q) = parse_ratio(text) {
        return Some(q);
    }
    let v: f64 = text.parse().ok()?;
    rationalize(v, 1e-12 * v.abs(), 1_000_000).filter(|r| r.within_tolerance).map(|r| r.value)
}

fn base(name: String, description: &str, kind: Kind, f: PolynomialFunction) -> Scenario {
    let mut sc = Scenario {
        name,
        description: description.to_string(),
        kind,
        f,
        metric: None,
        polar: None,
        starts: Vec::new(),
        angle_gap: None,
        integrator: IntegratorConfig::default(),
        l_seed: None,
        a_seed: None,
        checks: Vec::new(),
        control: Default::default(),
        tail_fraction: 0.2,
        seed: 0,
        sample_count: 4096,
    };
    sc.set_sweep(DEFAULT_START_COUNT, DEFAULT_RADIUS, false);
    sc
}

fn quadratic_f(a: Rational64) -> PolynomialFunction {
    PolynomialFunction::from_terms(2, [(vec![2, 0], rational(-1, 2)), (vec![0, 2], -big(a) / BigInt::from(2))])
        .expect("nonzero quadratic")
}

fn quadratic(a: Rational64) -> Result<Scenario, ScenarioError> {
    if *a.numer() <= 0 {
        return Err(ScenarioError::Invalid(format!("quadratic needs a > 0, got {a}")));
    }
    let af = to_f64(a);
    let name = format!("quadratic-a{}", crate::exponents::rational::format_ratio(a));
    let desc = SHIPPED.iter().find(|s| s.0 == name).map_or("-1/2(x^2 + a y^2)", |s| s.1);
    let mut sc = base(name, desc, Kind::Quadratic { a: af }, quadratic_f(a));
    sc.l_seed = Some(Rational64::from_integer(2));
    sc.a_seed = Some(-0.5 * if af < 1.0 { af } else { 1.0 });
    sc.checks = vec![
        Check::QuadraticOracle { a: af, tol: 1e-6 },
        Check::HalfPiBound,
        Check::CharacteristicExponent { l: Rational64::from_integer(2), exact: true },
        Check::CriticalValue { tol: 1e-4 },
    ];
    if a == Rational64::from_integer(2) {
        sc.checks.push(Check::Lojasiewicz {
            rho: [0.45, 0.55],
            rho_fixed: 0.5,
            c_min: 2f64.sqrt() * (1.0 - 1e-3),
            bochnak: [1.99, 2.001],
        });
        sc.checks.push(Check::Crossings {
            cases: vec![
                CrossingCase { start: vec![1.0, 1.0], gamma: "x2 - 1/2*x1".into(), expected: Some(1) },
                CrossingCase { start: vec![1.0, 1.0], gamma: "x2".into(), expected: Some(0) },
                CrossingCase { start: vec![0.0, 1.0], gamma: "x1".into(), expected: None },
            ],
        });
    }
    sc.checks.extend(Check::generic());
    Ok(sc)
}

/// `−r^m/m` with `r^m = (Σ x_i²)^{m/2}` expanded.
fn radial_f(m: u32, dim: usize) -> PolynomialFunction {
    let sq = Polynomial::from_terms(
        dim,
        (0..dim).map(|i| {
            let mut e = vec![0; dim];
            e[i] = 2;
            (e, rational(1, 1))
        }),
    );
    let mut p = Polynomial::constant(dim, rational(1, 1));
    for _ in 0..m / 2 {
        p = &p * &sq;
    }
    PolynomialFunction::new(p.scale(&rational(-1, m as i64))).expect("nonzero radial polynomial")
}

fn radial(m: u32) -> Result<Scenario, ScenarioError> {
    if m == 0 || m % 2 != 0 {
        return Err(ScenarioError::Invalid(format!("radial needs an even positive degree, got {m}")));
    }
    let name = format!("radial-{m}");
    let desc = SHIPPED.iter().find(|s| s.0 == name).map_or("-r^m/m: straight rays", |s| s.1);
    let mut sc = base(name, desc, Kind::Radial { m }, radial_f(m, 2));
    let l = Rational64::from_integer(m as i64);
    sc.l_seed = Some(l);
    sc.a_seed = Some(-1.0 / m as f64);
    sc.checks = vec![Check::CharacteristicExponent { l, exact: true }, Check::CriticalValue { tol: 1e-9 }];
    sc.checks.extend(Check::generic());
    Ok(sc)
}

fn example85() -> Scenario {
    let f = PolynomialFunction::parse("-1/4*x1^4 - 1/2*x1^2*x2^2 - 1/4*x2^4 - 1/3*x1*x2^3").expect("valid text");
    let mut sc = base("example85".into(), SHIPPED[3].1, Kind::Example85, f);
    let polar = PolarStart { r0: 0.1, theta0: 0.3, r_min: 1e-12 };
    let mut pts: Vec<Vec<f64>> = sc.starts.iter().map(|s| s.x.clone()).collect();
    pts.push(vec![polar.r0 * polar.theta0.cos(), polar.r0 * polar.theta0.sin()]);
    sc.set_starts(pts, None);
    sc.polar = Some(polar);
    sc.l_seed = Some(Rational64::from_integer(4));
    sc.a_seed = Some(-0.25);
    sc.checks = vec![
        Check::LogLaw { r_range: [1e-12, 1e-6], slope: [0.95, 1.05] },
        Check::CharacteristicExponent { l: Rational64::from_integer(4), exact: true },
        Check::CriticalValue { tol: 1e-3 },
    ];
    sc.checks.extend(Check::generic());
    sc
}

fn homogeneous3d() -> Scenario {
    let f = PolynomialFunction::parse("-x1^4 - x2^4 - x3^4 - x1^2*x2*x3 - x1*x2^2*x3 - x1*x2*x3^2")
        .expect("valid text");
    let mut sc = base("homogeneous3d".into(), SHIPPED[6].1, Kind::Homogeneous3d, f);
    sc.l_seed = Some(Rational64::from_integer(4));
    sc.checks = vec![Check::CharacteristicExponent { l: Rational64::from_integer(4), exact: true }];
    sc.checks.extend(Check::generic());
    sc
}

fn riemannian_conformal() -> Scenario {
    let mut sc = base(
        "riemannian-conformal".into(),
        SHIPPED[7].1,
        Kind::RiemannianConformal,
        quadratic_f(Rational64::from_integer(2)),
    );
    let factor = Polynomial::parse_with_dimension("1 + x1^2 + x2^2", 2).expect("valid text");
    sc.metric = Some(MetricField::conformal(factor));
    sc.set_sweep(DEFAULT_START_COUNT, DEFAULT_RADIUS, false);
    sc.l_seed = Some(Rational64::from_integer(2));
    sc.a_seed = Some(-0.5);
    sc.checks = vec![
        Check::QuadraticOracle { a: 2.0, tol: 1e-6 },
        Check::SecantConvergence { radii: [1e-6, 1e-8], tol: 1e-3 },
        Check::CharacteristicExponent { l: Rational64::from_integer(2), exact: true },
        Check::CriticalValue { tol: 1e-4 },
    ];
    sc.checks.extend(Check::generic());
    sc
}

fn riemannian_diag() -> Scenario {
    let mut sc = base("riemannian-diag".into(), SHIPPED[8].1, Kind::RiemannianDiag, radial_f(2, 2));
    sc.metric = Some(MetricField::diagonal(vec![rational(1, 1), rational(4, 1)]));
    sc.set_sweep(DEFAULT_START_COUNT, DEFAULT_RADIUS, false);
    sc.l_seed = Some(Rational64::from_integer(2));
    sc.a_seed = Some(-0.5);
    sc.checks = vec![
        Check::SecantConvergence { radii: [1e-6, 1e-8], tol: 1e-3 },
        Check::ClosedFormCurve { exponent: 0.25, tol: 1e-5 },
        Check::CharacteristicExponent { l: Rational64::from_integer(2), exact: true },
        Check::CriticalValue { tol: 1e-9 },
    ];
    sc.checks.extend(Check::generic());
    sc
}

/// A shipped scenario by name. Besides the listed names this accepts
/// `quadratic-a<p/q or decimal>` and `radial-<even m>`; `_` may replace `-`.
pub fn builtin(name: &str) -> Result<Scenario, ScenarioError> {
    let key = name.trim().to_ascii_lowercase().replace('_', "-");
    let unknown = || ScenarioError::Unknown(name.to_string());
    match key.as_str() {
        "example85" | "example-85" => return Ok(example85()),
        "homogeneous3d" => return Ok(homogeneous3d()),
        "riemannian-conformal" => return Ok(riemannian_conformal()),
        "riemannian-diag" => return Ok(riemannian_diag()),
        _ => {}
    }
    if let Some(rest) = key.strip_prefix("quadratic-a") {
        return quadratic(parse_parameter(rest).ok_or_else(unknown)?);
    }
    if let Some(rest) = key.strip_prefix("radial-") {
        return radial(rest.parse().map_err(|_| unknown())?);
    }
    Err(unknown())
}
