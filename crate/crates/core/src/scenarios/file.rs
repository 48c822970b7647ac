use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::exponents::rational::parse_ratio;
use crate::flow::IntegratorConfig;
use crate::polyfun::{MetricField, Polynomial, PolynomialFunction};
use crate::scalar::Precision;

use super::builtin::{angle_starts, sphere_starts, DEFAULT_RADIUS, DEFAULT_START_COUNT};
use super::{Check, ControlOverrides, Kind, PolarStart, Scenario, ScenarioError};

/// Partial integrator settings layered over a base configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorOverrides {
    pub r_min: Option<f64>,
    pub grad_min: Option<f64>,
    pub max_steps: Option<u64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub step_fraction: Option<f64>,
    pub sample_stride: Option<usize>,
    pub precision: Option<Precision>,
    pub auto_extend: Option<bool>,
    pub escape_factor: Option<f64>,
}

impl IntegratorOverrides {
    /// A precision override first resets the tolerance defaults of that
    /// precision; the other fields then apply on top.
    pub fn apply(&self, base: &IntegratorConfig) -> IntegratorConfig {
        let mut c = match self.precision {
            Some(p) if p != base.precision => IntegratorConfig {
                max_steps: base.max_steps,
                step_fraction: base.step_fraction,
                sample_stride: base.sample_stride,
                auto_extend: base.auto_extend,
                escape_factor: base.escape_factor,
                ..IntegratorConfig::for_precision(p)
            },
            _ => base.clone(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(r_min, grad_min, max_steps, rel_tol, abs_tol, step_fraction, sample_stride, auto_extend, escape_factor);
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Identity,
    /// `G = factor(x)·I`.
    Conformal { factor: String },
    /// Constant diagonal entries, each `"p/q"`.
    Diagonal { entries: Vec<String> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartsSpec {
    pub radius: Option<f64>,
    /// Number of equally spaced directions (used when neither angles nor points are given).
    pub count: Option<usize>,
    /// Planar start angles in radians.
    pub angles: Option<Vec<f64>>,
    pub points: Option<Vec<Vec<f64>>>,
}

/// Declarative scenario description read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub poly: String,
    pub dimension: Option<usize>,
    /// Seed for the characteristic exponent, `"p/q"`.
    pub l: Option<String>,
    pub a: Option<f64>,
    pub metric: Option<MetricSpec>,
    #[serde(default)]
    pub starts: StartsSpec,
    pub polar: Option<PolarStart>,
    #[serde(default)]
    pub integrator: IntegratorOverrides,
    #[serde(default)]
    pub control: ControlOverrides,
    /// Criterion identifiers such as `"AC-6"`.
    #[serde(default)]
    pub checks: Vec<String>,
    pub seed: Option<u64>,
    pub tail_fraction: Option<f64>,
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        let f = match self.dimension {
            Some(d) => PolynomialFunction::parse_with_dimension(&self.poly, d)?,
            None => PolynomialFunction::parse(&self.poly)?,
        };
        let dim = f.dimension();
        let metric = match &self.metric {
            None => None,
            Some(MetricSpec::Identity) => Some(MetricField::identity(dim)),
            Some(MetricSpec::Conformal { factor }) => {
                Some(MetricField::conformal(Polynomial::parse_with_dimension(factor, dim)?))
            }
            Some(MetricSpec::Diagonal { entries }) => {
                if entries.len() != dim {
                    return Err(invalid(format!("metric needs {dim} diagonal entries")));
                }
                let diag = entries
                    .iter()
                    .map(|e| {
                        let q = parse_ratio(e).map_err(invalid)?;
                        Ok(crate::polyfun::rational(*q.numer(), *q.denom()))
                    })
                    .collect::<Result<Vec<_>, ScenarioError>>()?;
                Some(MetricField::diagonal(diag))
            }
        };
        let l_seed = self.l.as_deref().map(parse_ratio).transpose().map_err(invalid)?;
        let mut sc = Scenario {
            name: self.name,
            description: self.description,
            kind: Kind::Custom,
            f,
            metric,
            polar: self.polar,
            starts: Vec::new(),
            angle_gap: None,
            integrator: self.integrator.apply(&IntegratorConfig::default()),
            l_seed,
            a_seed: self.a,
            checks: Vec::new(),
            control: self.control,
            tail_fraction: self.tail_fraction.unwrap_or(0.2),
            seed: self.seed.unwrap_or(0),
            sample_count: 4096,
        };
        let radius = self.starts.radius.unwrap_or(DEFAULT_RADIUS);
        let mut points = Vec::new();
        if let Some(angles) = &self.starts.angles {
            if dim != 2 {
                return Err(invalid("start angles need a planar polynomial"));
            }
            points.extend(angles.iter().map(|t| vec![radius * t.cos(), radius * t.sin()]));
        }
        if let Some(pts) = &self.starts.points {
            points.extend(pts.iter().cloned());
        }
        if points.is_empty() && (self.starts.count.is_some() || sc.polar.is_none()) {
            let n = self.starts.count.unwrap_or(DEFAULT_START_COUNT);
            if dim == 2 {
                sc.set_starts(angle_starts(n, radius, false), Some(std::f64::consts::TAU / n as f64));
            } else {
                sc.set_starts(sphere_starts(dim, n, radius), None);
            }
        } else {
            sc.set_starts(points, None);
        }
        for id in &self.checks {
            sc.checks.extend(check_from_id(id, &sc)?);
        }
        sc.validate()?;
        Ok(sc)
    }
}

/// Checks available to user scenarios; the rest need closed forms.
fn check_from_id(id: &str, sc: &Scenario) -> Result<Vec<Check>, ScenarioError> {
    let key = id.trim().to_ascii_uppercase().replace('_', "-");
    Ok(match key.as_str() {
        "AC-3" => vec![Check::LogLaw { r_range: [1e-12, 1e-6], slope: [0.95, 1.05] }],
        "AC-4" => {
            let l = sc.l_seed.ok_or_else(|| invalid("AC-4 needs `l`"))?;
            vec![Check::CharacteristicExponent { l, exact: sc.f.is_homogeneous() }]
        }
        "AC-5" => {
            sc.a_seed.ok_or_else(|| invalid("AC-5 needs `a`"))?;
            vec![Check::CriticalValue { tol: 1e-3 }]
        }
        "AC-6" => vec![Check::ControlMonotone { tail_fraction: 0.5 }],
        "AC-7" => vec![Check::EnergyIdentity { tol: 1e-6 }],
        "AC-8" => vec![Check::SigmaRatio { band: [0.99, 1.01] }],
        "AC-11" => vec![Check::RegionAttribution],
        "AC-12" => vec![Check::SecantConvergence { radii: [1e-6, 1e-8], tol: 1e-3 }],
        "GENERIC" => Check::generic(),
        "AC-1" | "AC-2" | "AC-9" | "AC-10" | "AC-13" => {
            return Err(invalid(format!("{id} relies on a closed form and is only run by built-in scenarios")))
        }
        _ => return Err(invalid(format!("unknown check `{id}`"))),
    })
}

pub fn parse_scenario_file(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
    file.into_scenario()
}

pub fn load_scenario_file(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_scenario_file(&text)
}
