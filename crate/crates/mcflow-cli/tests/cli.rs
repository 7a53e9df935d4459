//! Integration tests of the command-line binary: regression stability of the
//! table output, exit codes, and a file round trip through the flow and
//! verify commands.

use std::path::PathBuf;
use std::process::{Command, Output};

use mcflow::geometry::{DiscreteCurve, Shape};
use mcflow::io::{save_surface, SurfaceFile};
use mcflow::shrinkers::AnalyticShape;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mcflow"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mcflow-cli-{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn table_is_byte_identical_across_runs() {
    let a = run(&["table", "--max-n", "8", "--max-k", "12"]);
    let b = run(&["table", "--max-n", "8", "--max-k", "12"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "table output must be byte-identical");
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("S^1,1,1.52034690107,"));
    assert!(text.contains("cone(S^2xS^2),2,1.50000000000,"));
    assert!(text.contains("n=5 crossover"));
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let dir = tmp_dir("config");
    let conf = dir.join("run.conf");
    std::fs::write(&conf, "max_n = 2\nmax_k = 1\n").unwrap();

    let with_conf = run(&["table", "--config", conf.to_str().unwrap()]);
    assert!(with_conf.status.success());
    let lines = String::from_utf8(with_conf.stdout).unwrap().lines().count();
    // header + R^n + S^1 + S^2 + S^1xR^m + cone(1) closed-form + quadrature
    assert_eq!(lines, 7);

    let overridden = run(&[
        "table",
        "--config",
        conf.to_str().unwrap(),
        "--max-n",
        "4",
    ]);
    let lines = String::from_utf8(overridden.stdout).unwrap().lines().count();
    assert_eq!(lines, 11, "explicit flag must override the config file");
}

#[test]
fn usage_errors_exit_2() {
    // Missing input file.
    let out = run(&["entropy", "/nonexistent/surface"]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown verify suite.
    let dir = tmp_dir("usage");
    let path = dir.join("circle.surface");
    save_surface(
        &path,
        &SurfaceFile::from_shape(Shape::Curve(DiscreteCurve::circle(1.0, 64))),
    )
    .unwrap();
    let out = run(&["verify", "--suite", "bogus", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown pipeline shrinker.
    let out = run(&["pipeline", "--shrinker", "cube"]);
    assert_eq!(out.status.code(), Some(2));

    // Clap-level usage error.
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn nonconvergence_exits_3() {
    // Perturbing the round shrinker without the marginal override refuses
    // at the eigenvalue hypothesis.
    let dir = tmp_dir("perturb");
    let path = dir.join("circle.surface");
    save_surface(
        &path,
        &SurfaceFile::from_shape(Shape::Curve(DiscreteCurve::circle(2.0f64.sqrt(), 256))),
    )
    .unwrap();
    let out = run(&["perturb", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("mu"), "stderr: {err}");
}

#[test]
fn analytic_descriptor_entropy() {
    let dir = tmp_dir("analytic");
    let path = dir.join("cone.surface");
    save_surface(
        &path,
        &SurfaceFile::from_analytic(AnalyticShape::SimonsCone { k: 2 }),
    )
    .unwrap();
    let out = run(&["entropy", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("1.50000000000"), "{text}");
    assert!(text.contains("closed-form"));
}

#[test]
fn flow_trace_verify_roundtrip() {
    let dir = tmp_dir("flow");
    let surface = dir.join("circle.surface");
    save_surface(
        &surface,
        &SurfaceFile::from_shape(Shape::Curve(DiscreteCurve::circle(1.0, 128))),
    )
    .unwrap();
    let trace_csv = dir.join("trace.csv");
    let snapshots = dir.join("snapshots");
    let out = run(&[
        "flow",
        surface.to_str().unwrap(),
        "--kind",
        "rescaled",
        "--t-max",
        "0.2",
        "--trace",
        trace_csv.to_str().unwrap(),
        "--snapshots",
        snapshots.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&trace_csv).unwrap();
    assert!(csv.starts_with("t,F01,entropy_lb,min_phi,max_A,max_B2,n_vertices,mesh_quality"));
    assert!(csv.lines().count() > 100);

    // Verify the stored trace directory.
    let out = run(&[
        "verify",
        "--suite",
        "monotone",
        "--input",
        snapshots.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("monotonicity-suite: PASS"), "{text}");
}
