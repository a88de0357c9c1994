//! C interface. Configurations and reports are opaque handles created and
//! released by this library; every fallible call returns an [`HcStatus`]
//! and leaves a message for [`hc_last_error`] on failure.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hardycert::cli::{cmd_functionals, cmd_norm, BoundsReport, RunConfig};
use hardycert::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ConfigError = 3,
    ComputeError = 4,
    NotFound = 5,
    Panic = 6,
}

/// Validated run configuration.
pub struct HcConfig {
    inner: RunConfig,
}

/// Result of [`hc_compute`]; owns its JSON rendering.
pub struct HcReport {
    inner: BoundsReport,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

type Failure = (HcStatus, String);

fn fail(status: HcStatus, msg: impl Into<String>) -> Failure {
    (status, msg.into())
}

fn from_core(e: Error) -> Failure {
    let status = match e {
        Error::Config { .. } => HcStatus::ConfigError,
        _ => HcStatus::ComputeError,
    };
    (status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HcStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(fail(HcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(HcStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(HcStatus::NullPointer, format!("{what} is null")))
}

fn check_out<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(fail(HcStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn hc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses and validates a JSON configuration.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_config_from_json(json: *const c_char, out: *mut *mut HcConfig) -> HcStatus {
    guard(|| {
        check_out(out, "out")?;
        let text = read_str(json, "json")?;
        let cfg = RunConfig::from_json(text).map_err(from_core)?;
        cfg.validate().map_err(from_core)?;
        *out = Box::into_raw(Box::new(HcConfig { inner: cfg }));
        Ok(())
    })
}

/// Overrides the number of grid nodes per axis.
///
/// # Safety
/// `cfg` must come from [`hc_config_from_json`].
#[no_mangle]
pub unsafe extern "C" fn hc_config_set_nodes(cfg: *mut HcConfig, nodes: usize) -> HcStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| fail(HcStatus::NullPointer, "cfg is null"))?;
        let mut next = cfg.inner.clone();
        next.grid.nodes_per_axis = Some(nodes);
        next.validate().map_err(from_core)?;
        cfg.inner = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from [`hc_config_from_json`] or be null.
#[no_mangle]
pub unsafe extern "C" fn hc_config_free(cfg: *mut HcConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Evaluates the functionals, and the norm estimate when `with_norm` is
/// nonzero.
///
/// # Safety
/// `cfg` must be a live configuration and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_compute(cfg: *const HcConfig, with_norm: c_int, out: *mut *mut HcReport) -> HcStatus {
    guard(|| {
        check_out(out, "out")?;
        let cfg = deref(cfg, "cfg")?;
        let report = if with_norm != 0 {
            cmd_norm(&cfg.inner)
        } else {
            cmd_functionals(&cfg.inner)
        }
        .map_err(from_core)?;
        let text = serde_json::to_string(&report).map_err(|e| fail(HcStatus::ComputeError, e.to_string()))?;
        let json = CString::new(text).map_err(|e| fail(HcStatus::ComputeError, e.to_string()))?;
        *out = Box::into_raw(Box::new(HcReport { inner: report, json }));
        Ok(())
    })
}

/// Value of the functional `name` (e.g. `"B1"`).
///
/// # Safety
/// `report` must be live, `name` nul-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hc_report_value(report: *const HcReport, name: *const c_char, out: *mut f64) -> HcStatus {
    guard(|| {
        check_out(out, "out")?;
        let rep = deref(report, "report")?;
        let name = read_str(name, "name")?;
        *out = rep
            .inner
            .value(name)
            .ok_or_else(|| fail(HcStatus::NotFound, format!("{name} not in report")))?;
        Ok(())
    })
}

/// Certified interval for the best constant; `upper` is infinite when no
/// theorem bound applies.
///
/// # Safety
/// `report` must be live and both out pointers valid.
#[no_mangle]
pub unsafe extern "C" fn hc_report_interval(report: *const HcReport, lower: *mut f64, upper: *mut f64) -> HcStatus {
    guard(|| {
        check_out(lower, "lower")?;
        check_out(upper, "upper")?;
        let rep = deref(report, "report")?;
        let iv = rep
            .inner
            .certified_interval
            .as_ref()
            .ok_or_else(|| fail(HcStatus::NotFound, "no certified interval for this configuration"))?;
        *lower = iv.lower;
        *upper = iv.upper.unwrap_or(f64::INFINITY);
        Ok(())
    })
}

/// Direct norm estimate; `NotFound` unless computed with `with_norm`.
///
/// # Safety
/// `report` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hc_report_estimate(report: *const HcReport, out: *mut f64) -> HcStatus {
    guard(|| {
        check_out(out, "out")?;
        let rep = deref(report, "report")?;
        *out = rep
            .inner
            .norm
            .as_ref()
            .ok_or_else(|| fail(HcStatus::NotFound, "report has no norm estimate"))?
            .estimate;
        Ok(())
    })
}

/// 1 when every chained estimate held, 0 otherwise, -1 for null.
///
/// # Safety
/// `report` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn hc_report_passed(report: *const HcReport) -> c_int {
    match report.as_ref() {
        Some(r) => c_int::from(r.inner.passed()),
        None => -1,
    }
}

/// Full report as JSON, owned by `report`.
///
/// # Safety
/// `report` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn hc_report_json(report: *const HcReport) -> *const c_char {
    report.as_ref().map_or(ptr::null(), |r| r.json.as_ptr())
}

/// # Safety
/// `report` must come from [`hc_compute`] or be null.
#[no_mangle]
pub unsafe extern "C" fn hc_report_free(report: *mut HcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
