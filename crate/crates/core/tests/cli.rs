use std::path::{Path, PathBuf};

use levinson_core::cli::run;

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .display()
        .to_string()
}

fn levinson(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("levinson").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = "grid.points=300";

#[test]
fn help_and_version_exit_zero() {
    let (code, out, _) = levinson(&["--help"]);
    assert_eq!(code, 0);
    for sub in ["phases", "bound-states", "levinson", "winding", "sweep", "demo-resonance"] {
        assert!(out.contains(sub), "{sub} missing from help");
    }
    let (code, out, _) = levinson(&["--version"]);
    assert_eq!(code, 0);
    assert!(out.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn usage_errors_are_single_line_diagnostics() {
    let (code, out, err) = levinson(&["levinson"]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: kind=usage message="), "{err}");

    let (code, _, err) = levinson(&["frobnicate"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: kind=usage"));
}

#[test]
fn missing_config_is_an_io_error() {
    let (code, _, err) = levinson(&["levinson", "--config", "/nonexistent/levinson.toml"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: kind=io"), "{err}");
}

#[test]
fn invalid_override_names_the_key() {
    let (code, _, err) = levinson(&["levinson", "--config", &config("well4.toml"), "--set", "grid.points=3"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: kind=validation"), "{err}");
    assert!(err.contains("grid.points"), "{err}");

    let (code, _, err) = levinson(&["levinson", "--config", &config("well4.toml"), "--set", "grid.colour=3"]);
    assert_eq!(code, 1);
    assert!(err.contains("grid.colour"), "{err}");
}

#[test]
fn levinson_writes_report_and_aggregate_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("agg.csv");
    let json = dir.path().join("report.json");
    let (code, out, err) = levinson(&[
        "levinson",
        "--config",
        &config("well4.toml"),
        "--set",
        SMALL,
        "--csv",
        path_str(&csv),
        "--json",
        path_str(&json),
        "--timings",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("verdict                  pass"), "{out}");

    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    for key in [
        "potential",
        "grid",
        "lmax",
        "trace_P",
        "per_ell",
        "lhs_classical",
        "lhs_classical_literal",
        "lhs_topological",
        "rhs",
        "winding",
        "winding_int",
        "residuals",
        "tail_budget",
        "flags",
        "verdict",
        "version",
        "timings",
    ] {
        assert!(report.get(key).is_some(), "{key} missing");
    }
    assert_eq!(report["trace_P"], 1);
    assert_eq!(report["winding_int"], -1);
    assert_eq!(report["per_ell"][0]["N"], 1);
    assert!(report["timings"]["total_ms"].as_f64().unwrap() > 0.0);

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "lambda,integrand_classical,integrand_eq4_re,integrand_eq4_im,det_phase"
    );
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((first[0] - 1e-4).abs() < 1e-18);
    assert!((first[4] - 2.0 * std::f64::consts::PI).abs() < 0.1, "det_phase {}", first[4]);
    assert_eq!(text.lines().count(), 1 + report["grid"]["points_used"].as_u64().unwrap() as usize);
}

#[test]
fn phases_csv_has_one_row_per_node_and_channel() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("phases.csv");
    let (code, _, err) = levinson(&[
        "phases",
        "--config",
        &config("well4.toml"),
        "--set",
        SMALL,
        "--set",
        "lmax.mode=\"fixed\"",
        "--set",
        "lmax.fixed=3",
        "--csv",
        path_str(&csv),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("lambda,ell,delta,ddelta_dlambda\n"));
    assert_eq!(text.lines().count(), 1 + 300 * 4);
    let row = text.lines().nth(1).unwrap();
    assert_eq!(row.split(',').count(), 4);
    assert!(row.split(',').next().unwrap().contains('e'), "{row}");
}

#[test]
fn bound_states_reports_degeneracies() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("bound.json");
    let (code, out, err) = levinson(&["bound-states", "--config", &config("well25.toml"), "--json", path_str(&json)]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("trace_P 10"), "{out}");
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    let counts: Vec<u64> = report["per_ell"].as_array().unwrap().iter().map(|c| c["N"].as_u64().unwrap()).collect();
    assert_eq!(counts, vec![2, 1, 1, 0]);
}

#[test]
fn critical_well_violates_the_hypothesis() {
    let (code, out, _) = levinson(&["bound-states", "--config", &config("critical.toml")]);
    assert_eq!(code, 2);
    assert!(out.contains("half_bound true"), "{out}");

    let (code, out, _) = levinson(&["winding", "--config", &config("critical.toml"), "--set", SMALL]);
    assert_eq!(code, 2);
    assert!(out.contains("no integer claim"), "{out}");

    let (code, out, err) = levinson(&["demo-resonance", "--config", &config("critical.toml"), "--set", SMALL]);
    assert_eq!(code, 2, "{err}");
    assert!(out.contains("hypothesis violated"), "{out}");
}

#[test]
fn demo_resonance_rejects_generic_potentials() {
    let (code, _, err) = levinson(&["demo-resonance", "--config", &config("well4.toml"), "--set", SMALL]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: kind=usage"), "{err}");
}

#[test]
fn winding_matches_trace() {
    let (code, out, err) = levinson(&["winding", "--config", &config("well4.toml"), "--set", SMALL]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("winding_int -1"), "{out}");
    assert!(out.contains("consistent  true"), "{out}");
}

#[test]
fn sweep_writes_rows_and_brackets() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let (code, out, err) = levinson(&[
        "sweep",
        "--config",
        &config("sweep_well.toml"),
        "--set",
        "grid.points=200",
        "--from",
        "1",
        "--to",
        "4",
        "--steps",
        "4",
        "--csv",
        path_str(&csv),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "V0,trace_P,lhs_topological,lhs_over_2pi,winding,winding_int,half_bound");
    assert_eq!(text.lines().count(), 5);
    assert!(out.contains("critical depth"), "{out}");

    let (code, _, err) = levinson(&["sweep", "--config", &config("sweep_well.toml"), "--from", "4", "--to", "1"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: kind=usage"), "{err}");
}

#[test]
fn unwritable_output_is_an_io_error() {
    let (code, _, err) = levinson(&[
        "levinson",
        "--config",
        &config("well1.toml"),
        "--set",
        SMALL,
        "--json",
        "/nonexistent-dir/report.json",
    ]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: kind=io"), "{err}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_levinson");
    let status = |args: &[&str]| std::process::Command::new(bin).args(args).output().unwrap();
    let ok = status(&["levinson", "--config", &config("well1.toml"), "--set", SMALL]);
    assert_eq!(ok.status.code(), Some(0));
    let violated = status(&["bound-states", "--config", &config("critical.toml")]);
    assert_eq!(violated.status.code(), Some(2));
    let bad = status(&["levinson"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error: kind=usage"));
}
