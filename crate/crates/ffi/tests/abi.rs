use std::ffi::{CStr, CString};
use std::ptr;

use levinson_ffi::*;

const WELL4: &str = "[potential]\nkind = \"square_well\"\nV0 = 4.0\na = 1.0\n\
                     [grid]\nlambda_min = 1e-4\nlambda_max = 400.0\npoints = 800\n";

fn parse(text: &str) -> *mut LevConfig {
    let text = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    let status = unsafe { lev_config_parse(text.as_ptr(), ptr::null(), &mut cfg) };
    assert_eq!(status, LevStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

fn last_error() -> String {
    let p = lev_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn square_well_report_round_trip() {
    let cfg = parse(WELL4);
    unsafe {
        let mut report = ptr::null_mut();
        assert_eq!(lev_run_levinson(cfg, &mut report), LevStatus::Ok);

        let mut trace_p = 0;
        assert_eq!(lev_report_trace_p(report, &mut trace_p), LevStatus::Ok);
        assert_eq!(trace_p, 1);

        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(lev_report_lhs_topological(report, &mut re, &mut im), LevStatus::Ok);
        assert!((re - 2.0 * std::f64::consts::PI).abs() < 1e-3, "re = {re}");
        assert!(im.abs() < 1e-3, "im = {im}");

        let (mut classical, mut literal) = (0.0, 0.0);
        assert_eq!(lev_report_lhs_classical(report, &mut classical, &mut literal), LevStatus::Ok);
        assert!((classical / (2.0 * std::f64::consts::PI) - 1.0).abs() < 1e-2);

        let (mut w, mut wi) = (0.0, 0);
        assert_eq!(lev_report_winding(report, &mut w, &mut wi), LevStatus::Ok);
        assert_eq!(wi, -1);

        let mut verdict = LevVerdict::Fail;
        assert_eq!(lev_report_verdict(report, &mut verdict), LevStatus::Ok);
        assert_eq!(verdict, LevVerdict::Pass);

        let mut json = ptr::null_mut();
        assert_eq!(lev_report_to_json(report, &mut json), LevStatus::Ok);
        let parsed: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(parsed["trace_P"], 1);
        assert_eq!(parsed["verdict"], "pass");
        lev_string_free(json);

        lev_report_free(report);
        lev_config_free(cfg);
    }
}

#[test]
fn phase_and_bound_count_agree_with_core() {
    let cfg = parse(WELL4);
    unsafe {
        let mut n = 0;
        assert_eq!(lev_bound_count(cfg, 0, &mut n), LevStatus::Ok);
        assert_eq!(n, 1);
        assert_eq!(lev_bound_count(cfg, 1, &mut n), LevStatus::Ok);
        assert_eq!(n, 0);

        let mut delta = 0.0;
        assert_eq!(lev_phase_shift(cfg, 0, 1.0, &mut delta), LevStatus::Ok);
        // tan(k a + delta) = (k / q) tan(q a), q^2 = V0 + k^2, branch continuous from pi at threshold.
        let (k, q) = (1.0f64, 5.0f64.sqrt());
        let mut reference = ((k / q) * q.tan()).atan() - k;
        while reference < 0.0 {
            reference += std::f64::consts::PI;
        }
        assert!((delta - reference).abs() < 1e-8, "{delta} vs {reference}");
        lev_config_free(cfg);
    }
}

#[test]
fn overrides_revalidate_and_leave_config_unchanged_on_error() {
    let cfg = parse(WELL4);
    unsafe {
        let bad = CString::new("grid.points=3").unwrap();
        assert_eq!(lev_config_set(cfg, bad.as_ptr()), LevStatus::Validation);
        assert!(last_error().contains("grid.points"));

        let good = CString::new("potential.V0=1.0").unwrap();
        assert_eq!(lev_config_set(cfg, good.as_ptr()), LevStatus::Ok);
        assert!(lev_last_error_message().is_null());

        let mut toml = ptr::null_mut();
        assert_eq!(lev_config_to_toml(cfg, &mut toml), LevStatus::Ok);
        let text = CStr::from_ptr(toml).to_str().unwrap().to_string();
        lev_string_free(toml);
        assert!(text.contains("points = 800"), "{text}");

        let mut n = 9;
        assert_eq!(lev_bound_count(cfg, 0, &mut n), LevStatus::Ok);
        assert_eq!(n, 0);
        lev_config_free(cfg);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut cfg = ptr::null_mut();
        let broken = CString::new("[potential\nkind = 1").unwrap();
        assert_eq!(lev_config_parse(broken.as_ptr(), ptr::null(), &mut cfg), LevStatus::Parse);
        assert!(cfg.is_null());
        assert!(!last_error().is_empty());

        let invalid = CString::new("[potential]\nkind = \"square_well\"\na = 1.0\n").unwrap();
        assert_eq!(lev_config_parse(invalid.as_ptr(), ptr::null(), &mut cfg), LevStatus::Validation);
        assert!(last_error().contains("V0"));

        assert_eq!(lev_config_parse(ptr::null(), ptr::null(), &mut cfg), LevStatus::NullPointer);
        let text = CString::new(WELL4).unwrap();
        assert_eq!(lev_config_parse(text.as_ptr(), ptr::null(), ptr::null_mut()), LevStatus::NullPointer);

        let not_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(
            lev_config_parse(not_utf8.as_ptr().cast(), ptr::null(), &mut cfg),
            LevStatus::InvalidUtf8
        );

        let mut x = 0u64;
        assert_eq!(lev_report_trace_p(ptr::null(), &mut x), LevStatus::NullPointer);
        assert_eq!(lev_bound_count(ptr::null(), 0, &mut x), LevStatus::NullPointer);

        lev_config_free(ptr::null_mut());
        lev_report_free(ptr::null_mut());
        lev_string_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(lev_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/levinson.h")).unwrap();
    let source = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("LEV_STATUS_NON_INTEGER_WINDING = 8"));
}
