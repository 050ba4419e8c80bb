//! C interface to curvlab.
//!
//! Metrics are parsed from the line-oriented metric-file text into opaque
//! `CurvMetric` handles. Every fallible call returns a [`CurvStatus`]; on
//! anything but `Ok` or `VerdictFail` a message is available from
//! [`curv_last_error`] on the same thread. Strings returned through `out_json`
//! are owned by the caller and released with [`curv_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use curvlab::corpus;
use curvlab::dsl::{parse_metric_file, MetricFile, MetricSpec};
use curvlab::residual::{residual_scan, SystemId};
use curvlab::tensor::{bundle_at, cs_density_at, Want};
use curvlab::verdict::{check_constant_curvature, Lambda, DEFAULT_TOL};
use curvlab::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurvStatus {
    Ok = 0,
    /// The computation succeeded and the verdict is a failure.
    VerdictFail = 1,
    /// Malformed input: parse errors, unknown names.
    Usage = 2,
    /// Evaluation failed: singular metric, domain error.
    Eval = 3,
    NullArgument = 4,
    InvalidUtf8 = 5,
    /// Output buffer too small.
    BufferTooSmall = 6,
    Panic = 7,
}

/// Parsed metric file.
pub struct CurvMetric {
    file: MetricFile,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn from_error(e: Error) -> CurvStatus {
    set_error(e.to_string());
    if e.is_usage() {
        CurvStatus::Usage
    } else {
        CurvStatus::Eval
    }
}

/// Runs `f`, turning panics into `Panic` and clearing the error on success.
fn guard(f: impl FnOnce() -> CurvStatus) -> CurvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if matches!(s, CurvStatus::Ok | CurvStatus::VerdictFail) {
                set_error("");
            }
            s
        }
        Err(_) => {
            set_error("internal panic");
            CurvStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, CurvStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(CurvStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        CurvStatus::InvalidUtf8
    })
}

unsafe fn metric_arg<'a>(m: *const CurvMetric) -> Result<&'a MetricSpec, CurvStatus> {
    let handle = m.as_ref().ok_or_else(|| {
        set_error("null metric handle");
        CurvStatus::NullArgument
    })?;
    handle.file.metric.as_ref().ok_or_else(|| {
        set_error("the file has no [metric] section");
        CurvStatus::Usage
    })
}

unsafe fn point_arg<'a>(point: *const f64, len: usize, dim: usize) -> Result<&'a [f64], CurvStatus> {
    if point.is_null() {
        set_error("null point");
        return Err(CurvStatus::NullArgument);
    }
    if len != dim {
        set_error(format!("point has {len} coordinates, metric has {dim}"));
        return Err(CurvStatus::Usage);
    }
    Ok(std::slice::from_raw_parts(point, len))
}

unsafe fn write_json(out: *mut *mut c_char, value: &impl serde::Serialize) -> CurvStatus {
    if out.is_null() {
        set_error("null output pointer");
        return CurvStatus::NullArgument;
    }
    let text = serde_json::to_string(value).expect("reports serialize");
    *out = CString::new(text).expect("JSON has no NUL").into_raw();
    CurvStatus::Ok
}

macro_rules! tryc {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Parses metric-file text into a new handle stored in `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn curv_metric_parse(text: *const c_char, out: *mut *mut CurvMetric) -> CurvStatus {
    guard(|| {
        let text = tryc!(str_arg(text));
        if out.is_null() {
            set_error("null output pointer");
            return CurvStatus::NullArgument;
        }
        *out = ptr::null_mut();
        match parse_metric_file(text) {
            Ok(file) => {
                *out = Box::into_raw(Box::new(CurvMetric { file }));
                CurvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `m` must come from [`curv_metric_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn curv_metric_free(m: *mut CurvMetric) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of coordinates, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn curv_metric_dimension(m: *const CurvMetric) -> usize {
    m.as_ref().map_or(0, |h| h.file.coords.len())
}

/// Binds parameter `name` to `value`.
///
/// # Safety
/// `m` must be a live handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn curv_metric_set_param(m: *mut CurvMetric, name: *const c_char, value: f64) -> CurvStatus {
    guard(|| {
        let name = tryc!(str_arg(name));
        let Some(h) = m.as_mut() else {
            set_error("null metric handle");
            return CurvStatus::NullArgument;
        };
        h.file = h.file.with_param(name, value);
        CurvStatus::Ok
    })
}

/// Writes `R_ijkl` (row-major, `n⁴` values) at `point` into `out`.
///
/// # Safety
/// `point` must hold `len` values and `out` room for `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn curv_riemann(
    m: *const CurvMetric,
    point: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> CurvStatus {
    guard(|| {
        let metric = tryc!(metric_arg(m));
        let n = metric.dim();
        let p = tryc!(point_arg(point, len, n));
        if out.is_null() {
            set_error("null output buffer");
            return CurvStatus::NullArgument;
        }
        if out_len < n.pow(4) {
            set_error(format!("output buffer needs {} values", n.pow(4)));
            return CurvStatus::BufferTooSmall;
        }
        match bundle_at(metric, p, Want::default()) {
            Ok(b) => {
                std::slice::from_raw_parts_mut(out, n.pow(4)).copy_from_slice(&b.riemann_low);
                CurvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Chern–Simons density at `point`, raw or divided by `√|det g|`.
///
/// # Safety
/// `point` must hold `len` values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn curv_cs_density(
    m: *const CurvMetric,
    point: *const f64,
    len: usize,
    normalized: bool,
    out: *mut f64,
) -> CurvStatus {
    guard(|| {
        let metric = tryc!(metric_arg(m));
        let p = tryc!(point_arg(point, len, metric.dim()));
        if out.is_null() {
            set_error("null output pointer");
            return CurvStatus::NullArgument;
        }
        match cs_density_at(metric, p, normalized) {
            Ok(v) => {
                *out = v;
                CurvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

fn tol_or_default(m: &CurvMetric, tol: f64) -> f64 {
    if tol > 0.0 {
        tol
    } else {
        m.file.tol.unwrap_or(DEFAULT_TOL)
    }
}

/// Constant-curvature check over the file's sample plan; the report is
/// returned as JSON. `estimate` ignores `lambda`; `tol ≤ 0` uses the default.
///
/// # Safety
/// `m` must be a live handle and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn curv_check_constant_curvature(
    m: *const CurvMetric,
    lambda: f64,
    estimate: bool,
    tol: f64,
    out_json: *mut *mut c_char,
) -> CurvStatus {
    guard(|| {
        let metric = tryc!(metric_arg(m));
        let h = &*m;
        let l = if estimate { Lambda::Estimate } else { Lambda::Value(lambda) };
        match check_constant_curvature("ffi", metric, l, &h.file.plan, tol_or_default(h, tol)) {
            Ok(r) => verdict_json(out_json, &r),
            Err(e) => from_error(e),
        }
    })
}

unsafe fn verdict_json(out: *mut *mut c_char, r: &curvlab::verdict::Report) -> CurvStatus {
    match write_json(out, r) {
        CurvStatus::Ok if !r.verdict.passed() => CurvStatus::VerdictFail,
        s => s,
    }
}

/// Residuals of the named system over the file's fields and plan, as JSON.
///
/// # Safety
/// `m` must be a live handle, `system` NUL-terminated, `out_json` valid.
#[no_mangle]
pub unsafe extern "C" fn curv_residual(
    m: *const CurvMetric,
    system: *const c_char,
    tol: f64,
    out_json: *mut *mut c_char,
) -> CurvStatus {
    guard(|| {
        let name = tryc!(str_arg(system));
        let Some(h) = m.as_ref() else {
            set_error("null metric handle");
            return CurvStatus::NullArgument;
        };
        let sys = match SystemId::from_name(name) {
            Ok(s) => s,
            Err(e) => return from_error(e),
        };
        let f = &h.file;
        match residual_scan("ffi", sys, &f.fields, &f.params, &f.coords, &f.plan, tol_or_default(h, tol)) {
            Ok(r) => verdict_json(out_json, &r),
            Err(e) => from_error(e),
        }
    })
}

/// Runs a corpus case (or `"all"`); `VerdictFail` if any outcome differs from its expectation.
///
/// # Safety
/// `name` must be NUL-terminated and `out_json` valid.
#[no_mangle]
pub unsafe extern "C" fn curv_corpus_run(name: *const c_char, out_json: *mut *mut c_char) -> CurvStatus {
    guard(|| {
        let name = tryc!(str_arg(name));
        match corpus::corpus_run(name) {
            Ok(outcomes) => match write_json(out_json, &outcomes) {
                CurvStatus::Ok if !outcomes.iter().all(|c| c.all_match) => CurvStatus::VerdictFail,
                s => s,
            },
            Err(e) => from_error(e),
        }
    })
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn curv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn curv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_a_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, CurvStatus::Panic);
        let msg = unsafe { CStr::from_ptr(curv_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "internal panic");
    }

    #[test]
    fn success_clears_the_error() {
        set_error("old");
        assert_eq!(guard(|| CurvStatus::VerdictFail), CurvStatus::VerdictFail);
        assert!(unsafe { CStr::from_ptr(curv_last_error()) }.to_bytes().is_empty());
    }

    #[test]
    fn error_kinds_map_to_statuses() {
        assert_eq!(from_error(Error::UnknownSystem("x".into())), CurvStatus::Usage);
        assert_eq!(from_error(Error::DivisionByZero), CurvStatus::Eval);
    }
}
