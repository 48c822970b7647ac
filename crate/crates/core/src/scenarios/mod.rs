//! Curated example functions, closed-form oracles and end-to-end runs.

mod builtin;
mod checks;
mod file;
mod oracle;
mod run;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::exponents::rational::serde_ratio;
use crate::flow::{Crossings, FlowError, IntegratorConfig};
use crate::polyfun::{MetricField, PolyError, PolynomialFunction};

pub use builtin::{angle_starts, builtin, builtin_names, sphere_starts, DEFAULT_RADIUS, DEFAULT_START_COUNT};
pub use checks::{evaluate_checks, CheckOutcome};
pub use file::{load_scenario_file, parse_scenario_file, IntegratorOverrides, MetricSpec, ScenarioFile, StartsSpec};
pub use oracle::{quadratic_oracle, OracleError, OraclePoint};
pub use run::{line_fit, run_scenario, FunctionEstimates, PolarOutcome, ScenarioRun, StartOutcome};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}` (try `list`)")]
    Unknown(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("cannot read scenario file {path}: {message}")]
    Io { path: String, message: String },
}

/// Family a scenario belongs to; determines which closed forms apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    /// `−½(x² + a y²)`.
    Quadratic { a: f64 },
    /// `−r^m/m`.
    Radial { m: u32 },
    /// `−¼(x² + y²)² − ⅓xy³`.
    Example85,
    Homogeneous3d,
    /// `−½(x² + 2y²)` under `G = (1 + x² + y²)I`; same paths as the Euclidean flow.
    RiemannianConformal,
    /// `−½(x² + y²)` under `G = diag(1, 4)`; paths `y = c x^{1/4}`.
    RiemannianDiag,
    Custom,
}

/// Start on the polar-coordinate integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarStart {
    pub r0: f64,
    pub theta0: f64,
    #[serde(default = "PolarStart::default_r_min")]
    pub r_min: f64,
}

impl PolarStart {
    fn default_r_min() -> f64 {
        1e-12
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Start {
    pub x: Vec<f64>,
    /// Known limit of `F = f/r^l` along the trajectory from `x`.
    pub expected_a: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingCase {
    /// Integrated on its own, independent of the scenario's sweep.
    pub start: Vec<f64>,
    pub gamma: String,
    /// `None` stands for "inside `{Γ = 0}`".
    pub expected: Option<usize>,
}

impl CrossingCase {
    pub fn expected_crossings(&self) -> Crossings {
        self.expected.map_or(Crossings::Inside, Crossings::Count)
    }
}

/// An expected outcome of a run, tied to one acceptance criterion.
#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    /// Samples near `r = 10⁻², 10⁻⁴, 10⁻⁶` match the closed form componentwise.
    QuadraticOracle { a: f64, tol: f64 },
    /// Total spherical length `≤ π/2` on every start, nearly attained over the sweep.
    HalfPiBound,
    /// Slope of `1/θ` against `−ln r` on the polar run.
    LogLaw { r_range: [f64; 2], slope: [f64; 2] },
    /// `l̂ = l` on every start; `exact` adds `|raw − l| ≤ 1e−9`.
    CharacteristicExponent { l: Rational64, exact: bool },
    /// Estimated `a` within `tol` of each start's expected value.
    CriticalValue { tol: f64 },
    /// `g` has no decrease beyond tolerance on the tail of every trajectory.
    ControlMonotone { tail_fraction: f64 },
    EnergyIdentity { tol: f64 },
    /// `σ/r` within the band over the final decade of `r`.
    SigmaRatio { band: [f64; 2] },
    Lojasiewicz { rho: [f64; 2], rho_fixed: f64, c_min: f64, bochnak: [f64; 2] },
    Crossings { cases: Vec<CrossingCase> },
    /// Every decrease of `F` lies where it is allowed.
    RegionAttribution,
    /// Secant directions at two radii agree to `tol`.
    SecantConvergence { radii: [f64; 2], tol: f64 },
    /// `y/y₀ = (x/x₀)^p` to relative `tol` on starts off the axes.
    ClosedFormCurve { exponent: f64, tol: f64 },
}

impl Check {
    pub fn criterion(&self) -> &'static str {
        match self {
            Check::QuadraticOracle { .. } => "AC-1",
            Check::HalfPiBound => "AC-2",
            Check::LogLaw { .. } => "AC-3",
            Check::CharacteristicExponent { .. } => "AC-4",
            Check::CriticalValue { .. } => "AC-5",
            Check::ControlMonotone { .. } => "AC-6",
            Check::EnergyIdentity { .. } => "AC-7",
            Check::SigmaRatio { .. } => "AC-8",
            Check::Lojasiewicz { .. } => "AC-9",
            Check::Crossings { .. } => "AC-10",
            Check::RegionAttribution => "AC-11",
            Check::SecantConvergence { .. } | Check::ClosedFormCurve { .. } => "AC-12",
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Check::QuadraticOracle { .. } => "quadratic_oracle",
            Check::HalfPiBound => "half_pi_bound",
            Check::LogLaw { .. } => "log_law",
            Check::CharacteristicExponent { .. } => "characteristic_exponent",
            Check::CriticalValue { .. } => "critical_value",
            Check::ControlMonotone { .. } => "control_monotone",
            Check::EnergyIdentity { .. } => "energy_identity",
            Check::SigmaRatio { .. } => "sigma_ratio",
            Check::Lojasiewicz { .. } => "lojasiewicz",
            Check::Crossings { .. } => "crossings",
            Check::RegionAttribution => "region_attribution",
            Check::SecantConvergence { .. } => "secant_convergence",
            Check::ClosedFormCurve { .. } => "closed_form_curve",
        }
    }

    /// Checks that need no closed form, with their default tolerances.
    pub fn generic() -> Vec<Check> {
        vec![
            Check::ControlMonotone { tail_fraction: 0.5 },
            Check::EnergyIdentity { tol: 1e-6 },
            Check::SigmaRatio { band: [0.99, 1.01] },
            Check::RegionAttribution,
        ]
    }
}

/// Values that replace the estimated ones when building control parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlOverrides {
    #[serde(with = "serde_ratio::option", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Rational64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub kind: Kind,
    pub f: PolynomialFunction,
    pub metric: Option<MetricField>,
    pub polar: Option<PolarStart>,
    pub starts: Vec<Start>,
    /// Angular spacing of a planar angle sweep, when the starts are one.
    pub angle_gap: Option<f64>,
    pub integrator: IntegratorConfig,
    pub l_seed: Option<Rational64>,
    pub a_seed: Option<f64>,
    pub checks: Vec<Check>,
    pub control: ControlOverrides,
    /// Fraction of each trajectory used for tail estimates.
    pub tail_fraction: f64,
    /// Seed of the shell sampler for function-level estimates.
    pub seed: u64,
    pub sample_count: usize,
}

/// Parameters echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub description: String,
    pub polynomial: String,
    pub dimension: usize,
    pub metric: bool,
    pub start_count: usize,
    #[serde(with = "serde_ratio::option", default, skip_serializing_if = "Option::is_none")]
    pub l_seed: Option<Rational64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_seed: Option<f64>,
    pub checks: Vec<String>,
}

impl Scenario {
    /// Limit of `F` along the flow from `x0`, where a closed form is known.
    pub fn expected_a(&self, x0: &[f64]) -> Option<f64> {
        match self.kind {
            Kind::Quadratic { a } => Some(quadratic_limit(a, x0)),
            Kind::RiemannianConformal => Some(quadratic_limit(2.0, x0)),
            Kind::Radial { m } => Some(-1.0 / m as f64),
            Kind::RiemannianDiag => Some(-0.5),
            Kind::Example85 => example85_limit(x0[1].atan2(x0[0])),
            Kind::Homogeneous3d => None,
            Kind::Custom => self.a_seed,
        }
    }

    /// Replaces the starts, recomputing the per-start expectations.
    pub fn set_starts(&mut self, points: Vec<Vec<f64>>, angle_gap: Option<f64>) {
        self.starts = points
            .into_iter()
            .map(|x| Start { expected_a: self.expected_a(&x), x })
            .collect();
        self.angle_gap = angle_gap;
    }

    /// Starts on `n` equally spaced angles at `radius` (planar scenarios) or
    /// `n` spread sphere directions.
    pub fn set_sweep(&mut self, n: usize, radius: f64, half_offset: bool) {
        let dim = self.f.dimension();
        if dim == 2 {
            let pts = angle_starts(n, radius, half_offset);
            self.set_starts(pts, Some(std::f64::consts::TAU / n as f64));
        } else {
            self.set_starts(sphere_starts(dim, n, radius), None);
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.integrator.validate()?;
        let dim = self.f.dimension();
        if self.starts.is_empty() && self.polar.is_none() {
            return Err(ScenarioError::Invalid("no start points".into()));
        }
        for s in &self.starts {
            if s.x.len() != dim {
                return Err(ScenarioError::Invalid(format!(
                    "start {:?} has dimension {}, f has {dim}",
                    s.x,
                    s.x.len()
                )));
            }
            let r = crate::scalar::norm(&s.x);
            if !(r > self.integrator.r_min) || !r.is_finite() {
                return Err(ScenarioError::Invalid(format!("start {:?} is not outside r_min", s.x)));
            }
        }
        if let Some(m) = &self.metric {
            if m.dimension() != dim {
                return Err(ScenarioError::Invalid("metric dimension differs from f".into()));
            }
        }
        if let Some(p) = &self.polar {
            if dim != 2 || !(p.r0 > p.r_min && p.r_min > 0.0) {
                return Err(ScenarioError::Invalid("polar start needs a planar f and r0 > r_min > 0".into()));
            }
        }
        if let Some(alpha) = self.control.alpha {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(ScenarioError::Invalid(format!("alpha = {alpha} must lie in (0, 1)")));
            }
        }
        if self.control.l.is_some_and(|l| *l.numer() <= 0) {
            return Err(ScenarioError::Invalid("l must be positive".into()));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(ScenarioError::Invalid("tail_fraction must lie in (0, 1]".into()));
        }
        for c in &self.checks {
            if let Check::Crossings { cases } = c {
                if let Some(bad) = cases.iter().find(|k| k.start.len() != dim) {
                    return Err(ScenarioError::Invalid(format!("crossing start {:?} has the wrong dimension", bad.start)));
                }
            }
            if matches!(c, Check::LogLaw { .. }) && self.polar.is_none() {
                return Err(ScenarioError::Invalid("log-law check needs a polar start".into()));
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> ScenarioSummary {
        ScenarioSummary {
            name: self.name.clone(),
            description: self.description.clone(),
            polynomial: self.f.to_string(),
            dimension: self.f.dimension(),
            metric: self.metric.is_some(),
            start_count: self.starts.len(),
            l_seed: self.l_seed,
            a_seed: self.a_seed,
            checks: self.checks.iter().map(|c| format!("{} {}", c.criterion(), c.name())).collect(),
        }
    }
}

/// `lim F` for `−½(x² + a y²)`: the slower axis wins unless the start lies on the other one.
fn quadratic_limit(a: f64, x0: &[f64]) -> f64 {
    let on_x_axis = x0[1] == 0.0;
    let on_y_axis = x0[0] == 0.0;
    let toward_y = if a > 1.0 { on_y_axis } else if a < 1.0 { !on_x_axis } else { false };
    if toward_y {
        -0.5 * a
    } else {
        -0.5
    }
}

/// `lim F` for the degree-4 example. On the unit circle `f = −¼ − ⅓cs³` and
/// the angle moves along `df/dθ = ⅓s²(s² − 3c²)`; the limit direction is the
/// equilibrium the angle drifts to.
fn example85_limit(theta: f64) -> Option<f64> {
    use std::f64::consts::{FRAC_PI_3, PI, TAU};
    let t = theta.rem_euclid(TAU);
    let low = -0.25;
    let high = -0.25 + 3f64.sqrt() / 16.0;
    let near = |c: f64| (t - c).abs() < 1e-12;
    if near(0.0) || near(PI) || near(TAU) {
        Some(low)
    } else if near(FRAC_PI_3) || near(PI + FRAC_PI_3) {
        // unstable equilibria
        None
    } else if (0.0..FRAC_PI_3).contains(&t) || (PI..PI + FRAC_PI_3).contains(&t) {
        Some(low)
    } else {
        Some(high)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_limits() {
        assert_eq!(quadratic_limit(2.0, &[1.0, 1.0]), -0.5);
        assert_eq!(quadratic_limit(2.0, &[0.0, 1.0]), -1.0);
        assert_eq!(quadratic_limit(0.5, &[1.0, 1.0]), -0.25);
        assert_eq!(quadratic_limit(0.5, &[1.0, 0.0]), -0.5);
        assert_eq!(quadratic_limit(1.0, &[0.0, 1.0]), -0.5);
    }

    #[test]
    fn example85_basins() {
        use std::f64::consts::PI;
        assert_eq!(example85_limit(0.3), Some(-0.25));
        assert_eq!(example85_limit(0.0), Some(-0.25));
        assert_eq!(example85_limit(PI / 2.0), Some(-0.25 + 3f64.sqrt() / 16.0));
        assert_eq!(example85_limit(-0.3), Some(-0.25 + 3f64.sqrt() / 16.0));
        assert_eq!(example85_limit(PI / 3.0), None);
        assert_eq!(example85_limit(PI + 0.2), Some(-0.25));
    }
}
