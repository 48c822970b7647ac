use std::path::Path;
use std::process::{Command, Output};

use gradflow::report::RunReport;

fn gradflow(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gradflow"))
        .args(args)
        .env("GRADFLOW_OUT", out_dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_prints_every_shipped_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gradflow(&["list"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["quadratic-a2", "quadratic-a4", "example85", "riemannian-diag", "homogeneous3d"] {
        assert!(text.contains(name), "{name} missing from:\n{text}");
    }
}

#[test]
fn run_writes_report_and_plot_data() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gradflow(&["run", "--scenario", "quadratic-a2", "--r-min", "1e-6"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("PASS AC-1"));
    let dir = tmp.path().join("quadratic-a2");
    let report = std::fs::read_to_string(dir.join("report.toml")).unwrap();
    let rep = RunReport::from_toml(&report).unwrap();
    assert!(rep.passed);
    assert_eq!(rep.starts.len(), 8);
    assert!(dir.join("trajectory_0.dat").exists());
    assert!(dir.join("manifest.toml").exists());

    let summary = gradflow(&["report", dir.to_str().unwrap()], tmp.path());
    assert_eq!(summary.status.code(), Some(0));
    assert!(stdout(&summary).contains("quadratic-a2"));
}

#[test]
fn identical_runs_give_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["run", "--scenario", "example85", "--r-min", "1e-6", "--stamp", "none"];
    for dir in [&a, &b] {
        let o = gradflow(&[&args[..], &["--out", dir.path().to_str().unwrap()]].concat(), dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let mut compared = 0;
    for entry in walk(&a.path().join("example85")) {
        let rel = entry.strip_prefix(a.path()).unwrap();
        let (x, y) = (std::fs::read(&entry).unwrap(), std::fs::read(b.path().join(rel)).unwrap());
        assert!(x == y, "{} differs", rel.display());
        compared += 1;
    }
    assert!(compared > 5);
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn failed_check_exits_one_and_names_the_criterion() {
    let tmp = tempfile::tempdir().unwrap();
    // the flow selects l = 2, not 3
    let o = gradflow(&["run", "--poly", "-1/2*x1^2 - x2^2", "--start", "0.3,0.4", "--l", "3", "--r-min", "1e-6"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("FAIL AC-4"), "{}", stderr(&o));
}

#[test]
fn inline_polynomial_passes_generic_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gradflow(
        &["run", "--poly", "-1/2*x1^2 - x2^2", "--start", "0.3,0.4", "--start", "-0.2,0.1", "--l", "2", "--a", "-0.5"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    for ac in ["AC-4", "AC-5", "AC-6", "AC-7", "AC-8", "AC-11"] {
        assert!(text.contains(&format!("PASS {ac}")), "{ac} in:\n{text}");
    }
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(gradflow(&["run"], tmp.path()).status.code(), Some(2));
    let both = gradflow(&["run", "--scenario", "quadratic-a2", "--poly", "-x1^2"], tmp.path());
    assert_eq!(both.status.code(), Some(2));
    let bad_poly = gradflow(&["run", "--poly", "-x1^2 +* x2"], tmp.path());
    assert_eq!(bad_poly.status.code(), Some(2));
    assert!(stderr(&bad_poly).contains("column"), "{}", stderr(&bad_poly));
    assert_eq!(gradflow(&["run", "--scenario", "nope"], tmp.path()).status.code(), Some(2));
    assert_eq!(gradflow(&["frobnicate"], tmp.path()).status.code(), Some(2));
}

#[test]
fn scenario_file_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("tilted.toml");
    std::fs::write(
        &file,
        "name = \"tilted\"\npoly = \"-1/2*x^2 - 3/2*y^2 + x*y\"\nl = \"2\"\nchecks = [\"AC-4\", \"generic\"]\n\n[starts]\nradius = 0.25\ncount = 4\n\n[integrator]\nr_min = 1e-7\n",
    )
    .unwrap();
    let o = gradflow(&["run", "--file", file.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}\n{}", stdout(&o), stderr(&o));
    assert!(tmp.path().join("tilted/report.toml").exists());
}

#[test]
fn estimate_and_sweep_write_their_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let e = gradflow(&["estimate", "--scenario", "quadratic-a2", "--r-min", "1e-6"], tmp.path());
    assert_eq!(e.status.code(), Some(0), "{}", stderr(&e));
    let est = std::fs::read_to_string(tmp.path().join("quadratic-a2/estimate.toml")).unwrap();
    assert!(est.contains("rho"), "{est}");

    let s = gradflow(&["sweep", "--scenario", "quadratic-a4", "--count", "8", "--offset", "--r-min", "1e-6"], tmp.path());
    assert_eq!(s.status.code(), Some(0), "{}", stderr(&s));
    assert!(stdout(&s).contains("max spherical length over 8 starts"));
    let table = std::fs::read_to_string(tmp.path().join("quadratic-a4/sweep.dat")).unwrap();
    assert_eq!(table.lines().filter(|l| !l.starts_with('#')).count(), 8);
}

#[test]
fn verify_one_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gradflow(&["verify", "--scenario", "radial-4"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS")));
}
