//! Command-line front end: `list`, `run`, `sweep`, `estimate`, `verify`, `report`.
//!
//! Exit codes: 0 when every check passed, 1 on a failed check or estimate,
//! 2 on usage, configuration or output errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::exponents::rational::parse_ratio;
use crate::report::{scenario_dir_name, write_atomic, write_run, RunReport, Stamp};
use crate::scalar::Precision;
use crate::scenarios::{
    builtin, builtin_names, load_scenario_file, run_scenario, IntegratorOverrides, Scenario, ScenarioFile,
    ScenarioRun, StartsSpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gradflow", version, about = "Gradient trajectories near a critical point of a polynomial")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the shipped scenario names.
    List,
    /// Run a scenario or an inline polynomial; write trajectories, report and plot data.
    Run(RunArgs),
    /// Run over a dense sweep of start directions and report the largest spherical length.
    Sweep(SweepArgs),
    /// Estimate exponents and constants without evaluating checks.
    Estimate(RunArgs),
    /// Evaluate the checks of one scenario, or of every shipped scenario.
    Verify(RunArgs),
    /// Summarize a report written by an earlier run.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Double,
    Extended,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::Double => Precision::Double,
            PrecisionArg::Extended => Precision::Extended,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Shipped scenario name (see `list`).
    #[arg(long, conflicts_with_all = ["poly", "file"])]
    scenario: Option<String>,
    /// Inline polynomial, e.g. "-1/2*x^2 - y^2".
    #[arg(long, conflicts_with = "file", allow_hyphen_values = true)]
    poly: Option<String>,
    /// Scenario definition file (TOML).
    #[arg(long)]
    file: Option<PathBuf>,
    /// Number of variables for --poly when it exceeds the highest index used.
    #[arg(long)]
    dim: Option<usize>,
    /// Start point "x1,x2,..."; repeatable. Replaces the scenario's starts.
    #[arg(long = "start", value_parser = parse_point, allow_hyphen_values = true)]
    starts: Vec<Vec<f64>>,
    /// Termination radius.
    #[arg(long)]
    r_min: Option<f64>,
    /// Relative local error tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Arithmetic of the integrator state.
    #[arg(long, value_enum)]
    precision: Option<PrecisionArg>,
    /// Step budget per trajectory.
    #[arg(long)]
    max_steps: Option<u64>,
    /// Exponent α in g = (F − a) − r^α.
    #[arg(long)]
    alpha: Option<f64>,
    /// Characteristic exponent used for the control functions, "p/q".
    #[arg(long)]
    l: Option<String>,
    /// Asymptotic critical value used for the control functions.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Output root; each scenario writes into `<out>/<name>/`.
    #[arg(long, env = "GRADFLOW_OUT", default_value = "gradflow-out")]
    out: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// Seed of the shell sampler.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Stamp::None)]
    stamp: Stamp,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Number of start directions.
    #[arg(long, default_value_t = 32)]
    count: usize,
    /// Distance of the start points from the origin.
    #[arg(long, default_value_t = crate::scenarios::DEFAULT_RADIUS)]
    radius: f64,
    /// Shift planar angles by half a step, away from the coordinate axes.
    #[arg(long)]
    offset: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// A report.toml file or a scenario output directory containing one.
    input: PathBuf,
}

fn parse_point(text: &str) -> Result<Vec<f64>, String> {
    let v: Result<Vec<f64>, _> = text.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(format!("expected comma-separated numbers, got `{text}`")),
    }
}

/// A message plus exit code.
struct Failure(i32, String);

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure(EXIT_USAGE, msg.to_string())
}

fn build_scenario(a: &RunArgs) -> Result<Scenario, Failure> {
    let l = a.l.as_deref().map(parse_ratio).transpose().map_err(usage)?;
    let mut sc = match (&a.scenario, &a.poly, &a.file) {
        (Some(name), None, None) => builtin(name).map_err(usage)?,
        (None, Some(text), None) => {
            let mut checks = vec!["generic".to_string()];
            if l.is_some() {
                checks.push("AC-4".into());
            }
            if a.a.is_some() {
                checks.push("AC-5".into());
            }
            ScenarioFile {
                name: "custom".into(),
                description: "inline polynomial".into(),
                poly: text.clone(),
                dimension: a.dim,
                l: a.l.clone(),
                a: a.a,
                metric: None,
                starts: StartsSpec::default(),
                polar: None,
                integrator: IntegratorOverrides::default(),
                control: Default::default(),
                checks,
                seed: None,
                tail_fraction: None,
            }
            .into_scenario()
            .map_err(usage)?
        }
        (None, None, Some(path)) => load_scenario_file(path).map_err(usage)?,
        (None, None, None) => return Err(usage("one of --scenario, --poly or --file is required")),
        _ => return Err(usage("give exactly one of --scenario, --poly or --file")),
    };
    let overrides = IntegratorOverrides {
        r_min: a.r_min,
        rel_tol: a.tol,
        precision: a.precision.map(Into::into),
        max_steps: a.max_steps,
        ..Default::default()
    };
    sc.integrator = overrides.apply(&sc.integrator);
    if !a.starts.is_empty() {
        sc.set_starts(a.starts.clone(), None);
    }
    if l.is_some() {
        sc.control.l = l;
    }
    if a.a.is_some() {
        sc.control.a = a.a;
    }
    if a.alpha.is_some() {
        sc.control.alpha = a.alpha;
    }
    if let Some(seed) = a.seed {
        sc.seed = seed;
    }
    sc.validate().map_err(usage)?;
    Ok(sc)
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| usage(format!("cannot start worker threads: {e}")))?;
    Ok(pool.install(f))
}

fn execute(sc: &Scenario, jobs: Option<usize>) -> Result<ScenarioRun, Failure> {
    with_pool(jobs, || run_scenario(sc))?.map_err(usage)
}

fn print_checks(run: &ScenarioRun, out: &mut dyn Write, err: &mut dyn Write) {
    for c in &run.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{verdict} {} {} [{}]", c.criterion, c.name, run.summary.name);
        if !c.pass {
            let _ = writeln!(err, "FAIL {} {} [{}]: {}", c.criterion, c.name, run.summary.name, c.detail);
        }
    }
    for st in &run.starts {
        for e in &st.errors {
            let _ = writeln!(err, "note [{}] start {} {:?}: {e}", run.summary.name, st.index, st.start);
        }
    }
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let sc = build_scenario(a)?;
    let run = execute(&sc, a.jobs)?;
    let dir = write_run(&run, &sc.integrator, &a.out, a.stamp)
        .map_err(|e| usage(format!("cannot write output under {}: {e}", a.out.display())))?;
    print_checks(&run, out, err);
    let _ = writeln!(out, "wrote {}", dir.display());
    Ok(if run.all_passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    if a.count == 0 || !(a.radius > 0.0) {
        return Err(usage("--count must be positive and --radius must be positive"));
    }
    let mut sc = build_scenario(&a.run)?;
    if a.run.starts.is_empty() {
        sc.set_sweep(a.count, a.radius, a.offset);
        sc.validate().map_err(usage)?;
    }
    let run = execute(&sc, a.run.jobs)?;
    let dir = write_run(&run, &sc.integrator, &a.run.out, a.run.stamp)
        .map_err(|e| usage(format!("cannot write output under {}: {e}", a.run.out.display())))?;
    let mut table = String::from("# index spherical_length\n");
    let mut max: f64 = 0.0;
    for st in &run.starts {
        if let Some(rec) = &st.record {
            let len = rec.spherical_length();
            max = max.max(len);
            table.push_str(&format!("{} {len:.12e}\n", st.index));
        }
    }
    write_atomic(&dir.join("sweep.dat"), table.as_bytes()).map_err(|e| usage(format!("cannot write sweep.dat: {e}")))?;
    print_checks(&run, out, err);
    let _ = writeln!(out, "max spherical length over {} starts: {max:.12}", run.starts.len());
    let _ = writeln!(out, "wrote {}", dir.display());
    Ok(if run.all_passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

#[derive(serde::Serialize)]
struct EstimateLine {
    index: usize,
    start: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l_hat: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    raw_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega: Option<f64>,
    errors: Vec<String>,
}

#[derive(serde::Serialize)]
struct EstimateReport {
    scenario: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_f: Option<f64>,
    starts: Vec<EstimateLine>,
}

fn cmd_estimate(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let mut sc = build_scenario(a)?;
    sc.checks.clear();
    let run = execute(&sc, a.jobs)?;
    let rep = EstimateReport {
        scenario: run.summary.name.clone(),
        rho: run.function.lojasiewicz.as_ref().map(|l| l.rho),
        c_f: run.function.bochnak.map(|b| b.c_f),
        starts: run
            .starts
            .iter()
            .map(|st| EstimateLine {
                index: st.index,
                start: st.start.clone(),
                l_hat: st.exponent.as_ref().map(|e| crate::exponents::rational::format_ratio(e.l_hat)),
                raw_exponent: st.exponent.as_ref().map(|e| e.raw_limit),
                a: st.critical.as_ref().map(|c| c.a),
                omega: st.params.as_ref().map(|p| p.omega),
                errors: st.errors.clone(),
            })
            .collect(),
    };
    let text = toml::to_string(&rep).expect("estimate report serializes");
    let dir = a.out.join(scenario_dir_name(&rep.scenario));
    std::fs::create_dir_all(&dir)
        .and_then(|_| write_atomic(&dir.join("estimate.toml"), text.as_bytes()))
        .map_err(|e| usage(format!("cannot write output under {}: {e}", a.out.display())))?;
    let _ = write!(out, "{text}");
    let mut failed = false;
    for e in run.function.errors.iter().chain(run.starts.iter().flat_map(|s| &s.errors)) {
        let _ = writeln!(err, "estimate failed: {e}");
        failed = true;
    }
    Ok(if failed { EXIT_CHECK_FAILED } else { EXIT_OK })
}

fn cmd_verify(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let scenarios: Vec<Scenario> = if a.scenario.is_none() && a.poly.is_none() && a.file.is_none() {
        builtin_names()
            .into_iter()
            .map(|(n, _)| build_scenario(&RunArgs { scenario: Some(n.to_string()), ..clone_args(a) }))
            .collect::<Result<_, _>>()?
    } else {
        vec![build_scenario(a)?]
    };
    let mut all = true;
    for sc in &scenarios {
        let run = execute(sc, a.jobs)?;
        print_checks(&run, out, err);
        all &= run.all_passed();
    }
    Ok(if all { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn clone_args(a: &RunArgs) -> RunArgs {
    RunArgs {
        scenario: a.scenario.clone(),
        poly: a.poly.clone(),
        file: a.file.clone(),
        dim: a.dim,
        starts: a.starts.clone(),
        r_min: a.r_min,
        tol: a.tol,
        precision: a.precision,
        max_steps: a.max_steps,
        alpha: a.alpha,
        l: a.l.clone(),
        a: a.a,
        out: a.out.clone(),
        jobs: a.jobs,
        seed: a.seed,
        stamp: a.stamp,
    }
}

fn cmd_report(a: &ReportArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let path: &Path = &a.input;
    let file = if path.is_dir() { path.join("report.toml") } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file).map_err(|e| usage(format!("cannot read {}: {e}", file.display())))?;
    let rep = RunReport::from_toml(&text).map_err(|e| usage(format!("malformed report {}: {e}", file.display())))?;
    let _ = writeln!(out, "scenario {} ({} starts): {}", rep.scenario.name, rep.starts.len(), rep.scenario.polynomial);
    for st in &rep.starts {
        let _ = writeln!(
            out,
            "  start {} {:?}: {} samples, r_end {:.3e}, spherical length {:.9}",
            st.index,
            st.start,
            st.samples,
            st.r_end.unwrap_or(f64::NAN),
            st.spherical_length.unwrap_or(f64::NAN)
        );
    }
    for c in &rep.checks {
        let _ = writeln!(out, "{} {} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.criterion, c.name, c.detail);
        if !c.pass {
            let _ = writeln!(err, "FAIL {} {} [{}]: {}", c.criterion, c.name, rep.scenario.name, c.detail);
        }
    }
    Ok(if rep.passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let result = match &cli.command {
        Command::List => {
            for (name, desc) in builtin_names() {
                let _ = writeln!(out, "{name:<22} {desc}");
            }
            Ok(EXIT_OK)
        }
        Command::Run(a) => cmd_run(a, out, err),
        Command::Sweep(a) => cmd_sweep(a, out, err),
        Command::Estimate(a) => cmd_estimate(a, out, err),
        Command::Verify(a) => cmd_verify(a, out, err),
        Command::Report(a) => cmd_report(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_cli(std::iter::once("gradflow").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn list_names_scenarios() {
        let (code, out, _) = call(&["list"]);
        assert_eq!(code, 0);
        assert!(out.contains("quadratic-a2") && out.contains("riemannian-diag"));
    }

    #[test]
    fn parse_failure_reports_column() {
        let (code, _, err) = call(&["run", "--poly", "bogus+"]);
        assert_eq!(code, 2);
        assert!(err.contains("column 1"), "{err}");
    }

    #[test]
    fn input_source_rules() {
        assert_eq!(call(&["run"]).0, 2);
        assert_eq!(call(&["run", "--scenario", "radial-2", "--poly", "-x^2"]).0, 2);
        assert_eq!(call(&["run", "--scenario", "nope"]).0, 2);
        assert_eq!(call(&["run", "--scenario", "radial-2", "--start", "1,x"]).0, 2);
        assert_eq!(call(&["frobnicate"]).0, 2);
    }

    #[test]
    fn start_points_parse() {
        assert_eq!(parse_point("1, -2.5").unwrap(), vec![1.0, -2.5]);
        assert!(parse_point("").is_err());
        assert!(parse_point("1,inf").is_err());
    }
}
