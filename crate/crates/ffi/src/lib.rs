//! C ABI over `levinson-core`.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. Every fallible call returns a [`LevStatus`]
//! and records a message retrievable with [`lev_last_error_message`] on the
//! same thread. Strings returned as `*mut c_char` are released with
//! [`lev_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use levinson_core::config::{parse_config_with_overrides, RunConfig};
use levinson_core::levinson::{analyze, Criterion, LevinsonReport, Verdict};
use levinson_core::radial::phase_shift_variable;
use levinson_core::spectrum::count_bound_states;
use levinson_core::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevStatus {
    Ok = 0,
    Parse = 1,
    Validation = 2,
    Numerical = 3,
    Resolution = 4,
    MatchingSingular = 5,
    Range = 6,
    Inconsistency = 7,
    NonIntegerWinding = 8,
    Usage = 9,
    Io = 10,
    NullPointer = 11,
    InvalidUtf8 = 12,
    Panic = 13,
}

/// Verdict of a report.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevVerdict {
    Pass = 0,
    Fail = 1,
    HypothesisViolated = 2,
}

/// Parsed, validated run configuration.
pub struct LevConfig {
    text: String,
    base_dir: Option<PathBuf>,
    overrides: Vec<String>,
    config: RunConfig,
}

/// Result of a full Levinson check.
pub struct LevReport {
    report: LevinsonReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> LevStatus {
    match err {
        Error::Parse { .. } => LevStatus::Parse,
        Error::Validation { .. } => LevStatus::Validation,
        Error::Numerical { .. } => LevStatus::Numerical,
        Error::Resolution { .. } => LevStatus::Resolution,
        Error::MatchingSingular { .. } => LevStatus::MatchingSingular,
        Error::Range(_) => LevStatus::Range,
        Error::Inconsistency { .. } => LevStatus::Inconsistency,
        Error::NonIntegerWinding { .. } => LevStatus::NonIntegerWinding,
        Error::Usage(_) => LevStatus::Usage,
        Error::Io { .. } => LevStatus::Io,
    }
}

enum Failure {
    Core(Error),
    Status(LevStatus, &'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> LevStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LevStatus::Ok
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg.to_string());
            s
        }
        Err(_) => {
            set_error("internal panic".to_string());
            LevStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Status(LevStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Status(LevStatus::InvalidUtf8, "string argument is not UTF-8"))
}

unsafe fn out_arg<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or(Failure::Status(LevStatus::NullPointer, "null output pointer"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Status(LevStatus::NullPointer, "null handle"))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn lev_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lev_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lev_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a TOML configuration. `base_dir` (may be NULL) resolves relative
/// table paths.
///
/// # Safety
/// `text` and `base_dir` must be NULL or valid NUL-terminated strings;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lev_config_parse(
    text: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut LevConfig,
) -> LevStatus {
    guard(|| {
        let out = out_arg(out)?;
        *out = ptr::null_mut();
        let text = str_arg(text)?.to_string();
        let base_dir = if base_dir.is_null() {
            None
        } else {
            Some(PathBuf::from(str_arg(base_dir)?))
        };
        let config = parse_config_with_overrides(&text, base_dir.as_deref(), &[])?;
        *out = Box::into_raw(Box::new(LevConfig {
            text,
            base_dir,
            overrides: Vec::new(),
            config,
        }));
        Ok(())
    })
}

/// Applies a dotted `key=value` override, revalidating the whole config.
/// On failure the config is unchanged.
///
/// # Safety
/// `config` must be a live handle and `assignment` a valid string.
#[no_mangle]
pub unsafe extern "C" fn lev_config_set(config: *mut LevConfig, assignment: *const c_char) -> LevStatus {
    guard(|| {
        let cfg = config
            .as_mut()
            .ok_or(Failure::Status(LevStatus::NullPointer, "null handle"))?;
        let item = str_arg(assignment)?.to_string();
        let mut overrides = cfg.overrides.clone();
        overrides.push(item);
        cfg.config = parse_config_with_overrides(&cfg.text, cfg.base_dir.as_deref(), &overrides)?;
        cfg.overrides = overrides;
        Ok(())
    })
}

/// The validated config serialized back to TOML.
///
/// # Safety
/// `config` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lev_config_to_toml(config: *const LevConfig, out: *mut *mut c_char) -> LevStatus {
    guard(|| {
        let out = out_arg(out)?;
        *out = owned_string(handle(config)?.config.to_toml());
        Ok(())
    })
}

/// # Safety
/// `config` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn lev_config_free(config: *mut LevConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Unwrapped variable-phase shift `delta_l(lambda)` of the configured
/// potential.
///
/// # Safety
/// `config` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lev_phase_shift(config: *const LevConfig, ell: u32, lambda: f64, out: *mut f64) -> LevStatus {
    guard(|| {
        let out = out_arg(out)?;
        *out = phase_shift_variable(&handle(config)?.config.potential, ell, lambda)?;
        Ok(())
    })
}

/// Number of bound states in channel `ell`.
///
/// # Safety
/// `config` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lev_bound_count(config: *const LevConfig, ell: u32, out: *mut u64) -> LevStatus {
    guard(|| {
        let out = out_arg(out)?;
        *out = count_bound_states(&handle(config)?.config.potential, ell)?.count as u64;
        Ok(())
    })
}

/// Runs the full check (both identities and the winding relation).
///
/// # Safety
/// `config` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lev_run_levinson(config: *const LevConfig, out: *mut *mut LevReport) -> LevStatus {
    guard(|| {
        let out = out_arg(out)?;
        *out = ptr::null_mut();
        let report = analyze(&handle(config)?.config)?.report(Criterion::All, false);
        *out = Box::into_raw(Box::new(LevReport { report }));
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lev_report_trace_p(report: *const LevReport, out: *mut u64) -> LevStatus {
    guard(|| {
        *out_arg(out)? = handle(report)?.report.trace_p;
        Ok(())
    })
}

/// Real and imaginary parts of `int tr[i(S-1)* S'] d lambda`.
///
/// # Safety
/// `report` must be a live handle; `re` and `im` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lev_report_lhs_topological(report: *const LevReport, re: *mut f64, im: *mut f64) -> LevStatus {
    guard(|| {
        let r = &handle(report)?.report;
        *out_arg(re)? = r.lhs_topological.re;
        *out_arg(im)? = r.lhs_topological.im;
        Ok(())
    })
}

/// Per-channel classical value and the literal value with the Born
/// subtraction.
///
/// # Safety
/// `report` must be a live handle; outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lev_report_lhs_classical(
    report: *const LevReport,
    per_channel: *mut f64,
    literal: *mut f64,
) -> LevStatus {
    guard(|| {
        let r = &handle(report)?.report;
        *out_arg(per_channel)? = r.lhs_classical;
        *out_arg(literal)? = r.lhs_classical_literal;
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle; outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lev_report_winding(report: *const LevReport, winding: *mut f64, rounded: *mut i64) -> LevStatus {
    guard(|| {
        let r = &handle(report)?.report;
        *out_arg(winding)? = r.winding;
        *out_arg(rounded)? = r.winding_int;
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lev_report_verdict(report: *const LevReport, out: *mut LevVerdict) -> LevStatus {
    guard(|| {
        *out_arg(out)? = match handle(report)?.report.verdict {
            Verdict::Pass => LevVerdict::Pass,
            Verdict::Fail => LevVerdict::Fail,
            Verdict::HypothesisViolated => LevVerdict::HypothesisViolated,
        };
        Ok(())
    })
}

/// The report as JSON; release with [`lev_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lev_report_to_json(report: *const LevReport, out: *mut *mut c_char) -> LevStatus {
    guard(|| {
        let out = out_arg(out)?;
        *out = owned_string(handle(report)?.report.to_json());
        Ok(())
    })
}

/// # Safety
/// `report` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn lev_report_free(report: *mut LevReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
