//! Structured run reports, plot-data files and atomic output.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::DiagnosticsReport;
use crate::exponents::{ControlParams, CriticalValueReport, ExponentReport};
use crate::flow::{write_trajectory, IntegratorConfig, Termination, TrajectoryRecord};
use crate::scenarios::{CheckOutcome, ScenarioRun, ScenarioSummary, StartOutcome};

/// Rows kept per trajectory in a plot file; longer series are thinned by a fixed stride.
pub const MAX_PLOT_ROWS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Stamp {
    /// No wall-clock data: identical runs give byte-identical reports.
    #[default]
    None,
    /// Seconds since the Unix epoch.
    Unix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_samples: Option<usize>,
    /// `[ρ, c]` for a prescribed `ρ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_at: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_f_capped: Option<bool>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_slope: Option<f64>,
    pub fit_range: [f64; 2],
    pub fit_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub index: usize,
    pub start: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
    pub samples: usize,
    pub steps_accepted: u64,
    pub steps_rejected: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision_switch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spherical_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_residual: Option<f64>,
    pub f_monotone_ok: bool,
    pub errors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<ExponentReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical: Option<CriticalValueReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ControlParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
    pub passed: bool,
    pub scenario: ScenarioSummary,
    pub integrator: IntegratorConfig,
    pub function: FunctionSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polar: Option<PolarSummary>,
    pub checks: Vec<CheckOutcome>,
    pub starts: Vec<StartSummary>,
}

fn start_summary(st: &StartOutcome) -> StartSummary {
    let rec = st.record.as_ref();
    StartSummary {
        index: st.index,
        start: st.start.clone(),
        expected_a: st.expected_a,
        termination: rec.map(|r| r.termination),
        samples: rec.map_or(0, TrajectoryRecord::len),
        steps_accepted: rec.map_or(0, |r| r.steps_accepted),
        steps_rejected: rec.map_or(0, |r| r.steps_rejected),
        precision_switch: rec.and_then(|r| r.precision_switch),
        r_end: rec.map(|r| r.last().r),
        spherical_length: rec.map(TrajectoryRecord::spherical_length),
        energy_residual: rec.map(TrajectoryRecord::energy_residual),
        f_monotone_ok: rec.is_some_and(|r| r.f_monotone_ok),
        errors: st.errors.clone(),
        exponent: st.exponent.clone(),
        critical: st.critical.clone(),
        params: st.params.clone(),
        diagnostics: st.diagnostics.clone(),
    }
}

impl RunReport {
    pub fn new(run: &ScenarioRun, integrator: &IntegratorConfig, stamp: Stamp) -> Self {
        let f = &run.function;
        let polar = run.polar.as_ref().map(|p| match p {
            Ok(p) => {
                let last = p.trajectory.samples.last();
                PolarSummary {
                    termination: Some(p.trajectory.termination),
                    samples: p.trajectory.samples.len(),
                    r_end: last.map(|s| s.r),
                    theta_end: last.map(|s| s.theta),
                    log_slope: p.log_slope,
                    fit_range: p.fit_range,
                    fit_points: p.fit_points,
                    error: None,
                }
            }
            Err(e) => PolarSummary {
                termination: None,
                samples: 0,
                r_end: None,
                theta_end: None,
                log_slope: None,
                fit_range: [0.0, 0.0],
                fit_points: 0,
                error: Some(e.clone()),
            },
        });
        RunReport {
            tool: format!("gradflow {}", env!("CARGO_PKG_VERSION")),
            generated_at: match stamp {
                Stamp::None => None,
                Stamp::Unix => std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .ok()
                    .map(|d| d.as_secs()),
            },
            passed: run.all_passed(),
            scenario: run.summary.clone(),
            integrator: integrator.clone(),
            function: FunctionSummary {
                rho: f.lojasiewicz.as_ref().map(|l| l.rho),
                rho_samples: f.lojasiewicz.as_ref().map(|l| l.sample_count),
                constant_at: f.constant_at.map(|(r, c)| [r, c]),
                c_f: f.bochnak.map(|b| b.c_f),
                c_f_capped: f.bochnak.map(|b| b.capped),
                errors: f.errors.clone(),
            },
            polar,
            checks: run.checks.clone(),
            starts: run.starts.iter().map(start_summary).collect(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report types serialize to TOML")
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotFile {
    pub name: String,
    pub columns: [String; 2],
    pub claim: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotManifest {
    pub scenario: String,
    #[serde(default)]
    pub files: Vec<PlotFile>,
}

/// One data set: named blocks of `(x, y)` rows.
struct Series {
    name: &'static str,
    columns: [&'static str; 2],
    claim: &'static str,
    blocks: Vec<(String, Vec<[f64; 2]>)>,
}

fn thin(rows: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    if rows.len() <= MAX_PLOT_ROWS {
        return rows;
    }
    let stride = rows.len().div_ceil(MAX_PLOT_ROWS);
    let last = rows.len() - 1;
    rows.into_iter().enumerate().filter(|(i, _)| i % stride == 0 || *i == last).map(|(_, r)| r).collect()
}

fn collect_series(run: &ScenarioRun) -> Vec<Series> {
    let mut logfit = Vec::new();
    let mut theta_log = Vec::new();
    if let Some(Ok(p)) = &run.polar {
        let pts: Vec<_> = p.trajectory.samples.iter().filter(|s| s.theta != 0.0 && s.r < 1.0).collect();
        logfit.push(("polar".to_string(), thin(pts.iter().map(|s| [-s.r.ln(), 1.0 / s.theta]).collect())));
        theta_log.push(("polar".to_string(), thin(pts.iter().map(|s| [s.r, s.theta * -s.r.ln()]).collect())));
    }
    let mut sigma = Vec::new();
    let mut big_f = Vec::new();
    let mut g = Vec::new();
    let mut tail = Vec::new();
    for st in &run.starts {
        let Some(rec) = &st.record else { continue };
        let label = format!("start {} {:?}", st.index, st.start);
        if let Some(d) = &st.diagnostics {
            sigma.push((label.clone(), thin(d.sigma_ratio.clone())));
        }
        if let Some(series) = &st.series {
            big_f.push((label.clone(), thin(series.points.iter().map(|p| [p.s, p.big_f]).collect())));
            g.push((label.clone(), thin(series.points.iter().map(|p| [p.s_tilde, p.g]).collect())));
        }
        let lt = rec.samples.iter().filter(|s| s.r < (-1f64).exp()).map(|s| [-s.r.ln(), s.s_tilde_to_end]).collect();
        tail.push((label, thin(lt)));
    }
    vec![
        Series {
            name: "logfit.dat",
            columns: ["-ln r", "1/theta"],
            claim: "the polar angle decays like 1/(-ln r): slope of 1/theta against -ln r tends to 1",
            blocks: logfit,
        },
        Series {
            name: "theta_log.dat",
            columns: ["r", "theta*(-ln r)"],
            claim: "theta*(-ln r) tends to 1 as r tends to 0",
            blocks: theta_log,
        },
        Series {
            name: "sigma_ratio.dat",
            columns: ["r", "sigma/r"],
            claim: "remaining arc length over distance to the origin tends to 1",
            blocks: sigma,
        },
        Series {
            name: "control_f.dat",
            columns: ["s", "F"],
            claim: "F = f/r^l converges to the asymptotic critical value",
            blocks: big_f,
        },
        Series {
            name: "control_g.dat",
            columns: ["s_tilde", "g"],
            claim: "g = (F - a) - r^alpha increases along the flow",
            blocks: g,
        },
        Series {
            name: "length_tail.dat",
            columns: ["-ln r", "tail spherical length"],
            claim: "the tail spherical length is bounded by a power (-ln r)^(-delta)",
            blocks: tail,
        },
    ]
}

/// Writes the two-column plot files with data and a manifest describing
/// them. Data sets with fewer than two rows produce no file.
pub fn emit_plot_data(run: &ScenarioRun, dir: &Path) -> io::Result<PlotManifest> {
    fs::create_dir_all(dir)?;
    let mut manifest = PlotManifest { scenario: run.summary.name.clone(), files: Vec::new() };
    for series in collect_series(run) {
        let blocks: Vec<_> = series.blocks.into_iter().filter(|(_, rows)| rows.len() >= 2).collect();
        if blocks.is_empty() {
            continue;
        }
        let mut text = format!("# {} {}\n", series.columns[0], series.columns[1]);
        let mut rows = 0;
        for (i, (label, data)) in blocks.iter().enumerate() {
            if i > 0 {
                text.push_str("\n\n");
            }
            let _ = writeln!(text, "# {label}");
            for [x, y] in data {
                let _ = writeln!(text, "{x:.12e} {y:.12e}");
            }
            rows += data.len();
        }
        write_atomic(&dir.join(series.name), text.as_bytes())?;
        manifest.files.push(PlotFile {
            name: series.name.to_string(),
            columns: series.columns.map(String::from),
            claim: series.claim.to_string(),
            rows,
        });
    }
    let text = toml::to_string(&manifest).expect("manifest serializes");
    write_atomic(&dir.join("manifest.toml"), text.as_bytes())?;
    Ok(manifest)
}

/// Directory name for a scenario: `/` and whitespace become `_`.
pub fn scenario_dir_name(name: &str) -> String {
    name.chars().map(|c| if c == '/' || c == '\\' || c.is_whitespace() { '_' } else { c }).collect()
}

/// Report, manifest, plot data and one trajectory file per start under
/// `out/<scenario>/`. Returns the scenario directory.
pub fn write_run(run: &ScenarioRun, integrator: &IntegratorConfig, out: &Path, stamp: Stamp) -> io::Result<PathBuf> {
    let dir = out.join(scenario_dir_name(&run.summary.name));
    fs::create_dir_all(&dir)?;
    for st in &run.starts {
        if let Some(rec) = &st.record {
            let mut buf = Vec::new();
            write_trajectory(rec, &mut buf)?;
            write_atomic(&dir.join(format!("trajectory_{}.dat", st.index)), &buf)?;
        }
    }
    emit_plot_data(run, &dir)?;
    let report = RunReport::new(run, integrator, stamp);
    write_atomic(&dir.join("report.toml"), report.to_toml().as_bytes())?;
    Ok(dir)
}
