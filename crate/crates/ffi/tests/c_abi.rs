//! The C interface exercised from Rust, plus a C program compiled against the
//! generated header and the static library.

use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use curvlab_ffi::*;

const HYPERBOLIC: &str = "[space]\ncoords = x y z\n[metric]\ng 1 1 = 1/z^2\ng 2 2 = 1/z^2\ng 3 3 = 1/z^2\n\
                          [plan]\npoints = 16\nbox z = 0.5 2\n";

fn parse(text: &str) -> *mut CurvMetric {
    let c = CString::new(text).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { curv_metric_parse(c.as_ptr(), &mut m) }, CurvStatus::Ok);
    assert!(!m.is_null());
    m
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(curv_last_error()) }.to_string_lossy().into_owned()
}

fn take(s: *mut std::ffi::c_char) -> serde_json::Value {
    let v = serde_json::from_str(unsafe { CStr::from_ptr(s) }.to_str().unwrap()).unwrap();
    unsafe { curv_string_free(s) };
    v
}

#[test]
fn parse_query_and_free() {
    let m = parse(HYPERBOLIC);
    assert_eq!(unsafe { curv_metric_dimension(m) }, 3);
    let mut r = [0.0; 81];
    let p = [0.1, 0.2, 1.0];
    assert_eq!(unsafe { curv_riemann(m, p.as_ptr(), 3, r.as_mut_ptr(), r.len()) }, CurvStatus::Ok);
    // R_0101 = λ (g00 g11 − g01²) = −1 at z = 1
    let idx = |i: usize, j: usize, k: usize, l: usize| ((i * 3 + j) * 3 + k) * 3 + l;
    assert!((r[idx(0, 1, 0, 1)] + 1.0).abs() < 1e-12);
    let mut cs = f64::NAN;
    assert_eq!(unsafe { curv_cs_density(m, p.as_ptr(), 3, false, &mut cs) }, CurvStatus::Ok);
    assert_eq!(cs, 0.0);
    unsafe { curv_metric_free(m) };
    unsafe { curv_metric_free(ptr::null_mut()) };
}

#[test]
fn constant_curvature_reports() {
    let m = parse(HYPERBOLIC);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { curv_check_constant_curvature(m, -1.0, false, 0.0, &mut out) }, CurvStatus::Ok);
    let v = take(out);
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["n_points"], 16);
    assert_eq!(unsafe { curv_check_constant_curvature(m, 0.0, true, 1e-9, &mut out) }, CurvStatus::Ok);
    assert!((take(out)["lambda"].as_f64().unwrap() + 1.0).abs() < 1e-12);
    assert_eq!(unsafe { curv_check_constant_curvature(m, 1.0, false, 0.0, &mut out) }, CurvStatus::VerdictFail);
    assert_eq!(take(out)["verdict"], "fail");
    unsafe { curv_metric_free(m) };
}

#[test]
fn residuals_and_parameters() {
    let m = parse("[space]\ncoords = x y z\n[params]\nc = 4\n[fields]\nl = -c*cosh(x - c*z)^(-2)\n");
    let sys = CString::new("kdv").unwrap();
    let mut out = ptr::null_mut();
    // only c = 4 gives a soliton of this amplitude
    assert_eq!(unsafe { curv_residual(m, sys.as_ptr(), 0.0, &mut out) }, CurvStatus::Ok);
    unsafe { curv_string_free(out) };
    let c = CString::new("c").unwrap();
    assert_eq!(unsafe { curv_metric_set_param(m, c.as_ptr(), 2.0) }, CurvStatus::Ok);
    assert_eq!(unsafe { curv_residual(m, sys.as_ptr(), 0.0, &mut out) }, CurvStatus::VerdictFail);
    unsafe { curv_string_free(out) };
    let bad = CString::new("nope").unwrap();
    assert_eq!(unsafe { curv_residual(m, bad.as_ptr(), 0.0, &mut out) }, CurvStatus::Usage);
    assert!(last_error().contains("nope"));
    unsafe { curv_metric_free(m) };
}

#[test]
fn errors_are_reported() {
    let text = CString::new("[space]\ncoords = x y z\n[metric]\ng 1 1 = (\n").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { curv_metric_parse(text.as_ptr(), &mut m) }, CurvStatus::Usage);
    assert!(m.is_null());
    assert!(last_error().starts_with("line 4"), "{}", last_error());
    assert_eq!(unsafe { curv_metric_parse(ptr::null(), &mut m) }, CurvStatus::NullArgument);

    let m = parse(HYPERBOLIC);
    let p = [0.0, 0.0, 0.0];
    let mut r = [0.0; 81];
    assert_eq!(unsafe { curv_riemann(m, p.as_ptr(), 3, r.as_mut_ptr(), 81) }, CurvStatus::Eval);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { curv_riemann(m, p.as_ptr(), 2, r.as_mut_ptr(), 81) }, CurvStatus::Usage);
    assert_eq!(unsafe { curv_riemann(m, [0.0, 0.0, 1.0].as_ptr(), 3, r.as_mut_ptr(), 80) }, CurvStatus::BufferTooSmall);
    assert_eq!(unsafe { curv_metric_dimension(ptr::null()) }, 0);
    unsafe { curv_metric_free(m) };
}

#[test]
fn corpus_through_the_interface() {
    let name = CString::new("hyperbolic_lm1").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { curv_corpus_run(name.as_ptr(), &mut out) }, CurvStatus::Ok);
    assert_eq!(take(out)[0]["all_match"], true);
    let name = CString::new("missing").unwrap();
    assert_eq!(unsafe { curv_corpus_run(name.as_ptr(), &mut out) }, CurvStatus::Usage);
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/curvlab.h")
}

#[test]
fn header_declares_the_interface() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "curv_metric_parse",
        "curv_metric_free",
        "curv_metric_dimension",
        "curv_metric_set_param",
        "curv_riemann",
        "curv_cs_density",
        "curv_check_constant_curvature",
        "curv_residual",
        "curv_corpus_run",
        "curv_last_error",
        "curv_string_free",
        "typedef struct CurvMetric CurvMetric",
        "CURV_STATUS_VERDICT_FAIL = 1",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "curvlab.h"

int main(void) {
    const char *text = "[space]\ncoords = x y z\n[metric]\ng 1 1 = 1/z^2\ng 2 2 = 1/z^2\ng 3 3 = 1/z^2\n[plan]\npoints = 8\nbox z = 0.5 2\n";
    CurvMetric *m = NULL;
    if (curv_metric_parse(text, &m) != CURV_STATUS_OK) return 10;
    if (curv_metric_dimension(m) != 3) return 11;
    char *json = NULL;
    if (curv_check_constant_curvature(m, -1.0, false, 0.0, &json) != CURV_STATUS_OK) return 12;
    if (strstr(json, "\"verdict\":\"pass\"") == NULL) return 13;
    curv_string_free(json);
    double p[3] = {0.0, 0.0, 0.0}, r[81];
    if (curv_riemann(m, p, 3, r, 81) != CURV_STATUS_EVAL) return 14;
    if (strlen(curv_last_error()) == 0) return 15;
    curv_metric_free(m);
    puts("ok");
    return 0;
}
"#;

/// `target/<profile>` of the running test binary.
fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = profile_dir().join("libcurvlab_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("a C compiler is available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
