use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use hardycert_ffi::*;

const CONFIG: &str = r#"{
    "weight_v": {"kind": "power", "c": 1.0, "exponents": [0.0, 0.0]},
    "weight_w": {"kind": "power", "c": 1.0, "exponents": [0.0, 0.0]},
    "p": 3.0, "q": 2.0,
    "grid": {"x_min": 0.0, "x_max": 1.0, "nodes_per_axis": 33, "spacing": "linear"},
    "iters": 50
}"#;

fn last_error() -> String {
    let p = hc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn config(text: &str) -> *mut HcConfig {
    let json = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { hc_config_from_json(json.as_ptr(), &mut cfg) }, HcStatus::Ok);
    cfg
}

#[test]
fn round_trip() {
    let cfg = config(CONFIG);
    unsafe {
        let mut rep = ptr::null_mut();
        assert_eq!(hc_compute(cfg, 1, &mut rep), HcStatus::Ok);
        let mut b1 = 0.0;
        assert_eq!(hc_report_value(rep, c"B1".as_ptr(), &mut b1), HcStatus::Ok);
        assert!(b1 > 0.0 && b1.is_finite());
        let (mut lo, mut hi, mut est) = (0.0, 0.0, 0.0);
        assert_eq!(hc_report_interval(rep, &mut lo, &mut hi), HcStatus::Ok);
        assert_eq!(hc_report_estimate(rep, &mut est), HcStatus::Ok);
        assert!(lo <= est && est <= hi, "{lo} {est} {hi}");
        assert_eq!(hc_report_passed(rep), 1);
        let json = CStr::from_ptr(hc_report_json(rep)).to_str().unwrap();
        let v: serde_json::Value = serde_json::from_str(json).unwrap();
        assert_eq!(v["command"], "norm");
        assert_eq!(hc_report_value(rep, c"A1".as_ptr(), &mut b1), HcStatus::NotFound);
        assert!(last_error().contains("A1"));
        hc_report_free(rep);
        hc_config_free(cfg);
    }
}

#[test]
fn functionals_only_has_no_estimate() {
    let cfg = config(CONFIG);
    unsafe {
        let mut rep = ptr::null_mut();
        assert_eq!(hc_compute(cfg, 0, &mut rep), HcStatus::Ok);
        let mut est = 0.0;
        assert_eq!(hc_report_estimate(rep, &mut est), HcStatus::NotFound);
        hc_report_free(rep);
        hc_config_free(cfg);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(hc_config_from_json(ptr::null(), &mut cfg), HcStatus::NullPointer);
        let bad = CString::new(CONFIG.replace("\"p\": 3.0", "\"p\": 0.5")).unwrap();
        assert_eq!(hc_config_from_json(bad.as_ptr(), &mut cfg), HcStatus::ConfigError);
        assert!(last_error().contains('p'));
        assert!(cfg.is_null());
        let junk = [0xffu8, 0];
        assert_eq!(hc_config_from_json(junk.as_ptr().cast(), &mut cfg), HcStatus::InvalidUtf8);

        let cfg = config(CONFIG);
        assert_eq!(hc_config_set_nodes(cfg, 4), HcStatus::ConfigError);
        assert_eq!(hc_config_set_nodes(cfg, 17), HcStatus::Ok);
        assert_eq!(hc_compute(cfg, 0, ptr::null_mut()), HcStatus::NullPointer);
        assert_eq!(hc_report_passed(ptr::null()), -1);
        assert!(hc_report_json(ptr::null()).is_null());
        hc_config_free(cfg);
        hc_config_free(ptr::null_mut());
        hc_report_free(ptr::null_mut());
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(hc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compiles a C program against the generated header and the static
/// library built alongside this test.
#[test]
fn c_program_links() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    let lib = lib_dir.join("libhardycert_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = std::env::temp_dir().join(format!("hardycert-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    std::fs::write(
        &src,
        format!(
            r#"#include <stdio.h>
#include "hardycert.h"
int main(void) {{
    const char *json = {json:?};
    HcConfig *cfg = NULL;
    HcReport *rep = NULL;
    double b1 = 0.0;
    if (hc_config_from_json(json, &cfg) != HC_STATUS_OK) return 2;
    if (hc_compute(cfg, 0, &rep) != HC_STATUS_OK) return 3;
    if (hc_report_value(rep, "B1", &b1) != HC_STATUS_OK || !(b1 > 0.0)) return 4;
    if (hc_config_from_json("{{", &cfg) != HC_STATUS_CONFIG_ERROR || hc_last_error() == NULL) return 5;
    printf("%.6f\n", b1);
    hc_report_free(rep);
    hc_config_free(cfg);
    return 0;
}}
"#,
            json = CONFIG
        ),
    )
    .unwrap();
    let bin = dir.join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let b1: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!(b1 > 0.0);
    let _ = std::fs::remove_dir_all(&dir);
}
