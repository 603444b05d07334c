use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use lzheom_ffi::*;

fn parse(text: &str) -> Result<*mut LzConfig, (LzStatus, String)> {
    let c = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    let status = unsafe { lz_config_parse(c.as_ptr(), &mut cfg) };
    if status == LzStatus::Ok {
        Ok(cfg)
    } else {
        let msg = unsafe { CStr::from_ptr(lz_last_error()) };
        Err((status, msg.to_string_lossy().into_owned()))
    }
}

#[test]
fn evolve_and_read_back() {
    let cfg = parse("protocol = lz_cd\ntf = 1\ngamma = 0.5\ndepth = 6\n").unwrap();
    let mut trace = ptr::null_mut();
    assert_eq!(unsafe { lz_evolve(cfg, &mut trace) }, LzStatus::Ok);
    unsafe {
        let n = lz_trace_len(trace);
        assert_eq!(n, 1001);
        let times = std::slice::from_raw_parts(lz_trace_times(trace), n);
        let fid = std::slice::from_raw_parts(lz_trace_fidelity(trace), n);
        assert_eq!(times[0], 0.0);
        assert_eq!(times[n - 1], 1.0);
        assert_eq!(fid[n - 1], lz_trace_final_fidelity(trace));
        assert!(fid[n - 1] > 0.9 && fid[n - 1] < 1.0);
        assert_eq!(lz_trace_depth_used(trace), 6);

        let mut rho = [0.0; 8];
        assert_eq!(lz_trace_state(trace, n - 1, rho.as_mut_ptr()), LzStatus::Ok);
        // unit trace, Hermitian off-diagonals
        assert!((rho[0] + rho[6] - 1.0).abs() < 1e-10);
        assert!((rho[2] - rho[4]).abs() < 1e-12 && (rho[3] + rho[5]).abs() < 1e-12);
        assert_eq!(lz_trace_state(trace, n, rho.as_mut_ptr()), LzStatus::InvalidArgument);
        lz_trace_free(trace);
        lz_config_free(cfg);
    }
}

#[test]
fn converged_evolution_reports_depth() {
    let cfg = parse("protocol = lz\ntf = 2\ngamma = 1\ndepth = 2\n").unwrap();
    let mut trace = ptr::null_mut();
    unsafe {
        assert_eq!(lz_evolve_converged(cfg, 1e-6, 40, &mut trace), LzStatus::Ok);
        assert!(lz_trace_depth_used(trace) > 2);
        lz_trace_free(trace);
        lz_config_free(cfg);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let (status, msg) = parse("tf = 5\nwarp = 9\n").unwrap_err();
    assert_eq!(status, LzStatus::Config);
    assert!(msg.contains("line 2"), "{msg}");

    let cfg = parse("tf = 1\n").unwrap();
    unsafe {
        assert_eq!(lz_config_set_gamma(cfg, -1.0), LzStatus::InvalidArgument);
        assert_eq!(lz_config_set_depth(cfg, 3), LzStatus::Ok);
        assert_eq!(lz_config_set_gamma(ptr::null_mut(), 1.0), LzStatus::NullPointer);
        assert_eq!(lz_evolve(ptr::null(), &mut ptr::null_mut()), LzStatus::NullPointer);
        assert_eq!(lz_evolve(cfg, ptr::null_mut()), LzStatus::NullPointer);
        lz_config_free(cfg);
        lz_config_free(ptr::null_mut());
        lz_trace_free(ptr::null_mut());
        assert_eq!(lz_trace_len(ptr::null()), 0);
        assert!(lz_trace_final_fidelity(ptr::null()).is_nan());
    }

    let bad = [b'x', 0xff, 0];
    let mut cfg = ptr::null_mut();
    let status = unsafe { lz_config_parse(bad.as_ptr().cast(), &mut cfg) };
    assert_eq!(status, LzStatus::InvalidUtf8);
    assert!(cfg.is_null());
}

#[test]
fn numerical_failure_maps_to_numerical() {
    let cfg = parse("protocol = lz_cd\ntf = 1\ngamma = 0.5\ndepth = 6\ndt = 0.25\n").unwrap();
    let mut trace = ptr::null_mut();
    unsafe {
        let status = lz_evolve_converged(cfg, 1e-12, 8, &mut trace);
        assert_eq!(status, LzStatus::Numerical);
        assert!(trace.is_null());
        lz_config_free(cfg);
    }
}

#[test]
fn oracle_verdicts() {
    let good = parse("protocol = lz_cd\ntf = 1\ngamma = 0.5\ndepth = 8\n").unwrap();
    let bad = parse("protocol = lz_cd\ntf = 5\ngamma = 5\ndepth = 2\n").unwrap();
    let closed = parse("protocol = lz_cd\ntf = 1\n").unwrap();
    let (mut v, mut d) = (LzVerdict::Inconclusive, f64::NAN);
    unsafe {
        assert_eq!(lz_oracle_check(good, 1e-3, &mut v, &mut d), LzStatus::Ok);
        assert_eq!(v, LzVerdict::Pass);
        assert!(d < 1e-3);
        assert_eq!(lz_oracle_check(bad, 1e-3, &mut v, &mut d), LzStatus::Ok);
        assert_eq!(v, LzVerdict::Fail);
        assert!(d > 1e-2);
        assert_eq!(lz_oracle_check(closed, 1e-3, &mut v, &mut d), LzStatus::InvalidArgument);
        for c in [good, bad, closed] {
            lz_config_free(c);
        }
    }
}

#[test]
fn closed_form_helpers() {
    assert!((lz_probability(0.5, 0.12) - 0.9620876).abs() < 1e-6);
    assert_eq!(lz_wubs_asymptotic(0.5, 0.0, 0.12), lz_probability(0.5, 0.12));
    assert!(lz_wubs_asymptotic(0.5, 1.0, 0.12) > lz_probability(0.5, 0.12));
    let v = unsafe { CStr::from_ptr(lz_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/lzheom.h")
}

#[test]
fn header_declares_the_surface() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "typedef struct LzConfig LzConfig;",
        "typedef struct LzTrace LzTrace;",
        "LZ_STATUS_NUMERICAL = 5",
        "lz_config_parse(",
        "lz_evolve_converged(",
        "lz_trace_state(",
        "lz_oracle_check(",
        "lz_last_error(void)",
    ] {
        assert!(h.contains(name), "{name}");
    }
}

/// Builds the static library, then compiles and runs a small C program
/// against it and the header.
///
/// `cargo test` only produces the rlib, so the archive is built here into a
/// target directory of its own, which also keeps clear of the lock held by
/// the outer cargo.
#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let target = exe.ancestors().nth(3).unwrap().join("capi");
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("Cargo.toml");
    let build = Command::new(env!("CARGO"))
        .args(["build", "--lib", "--quiet", "--manifest-path"])
        .arg(&manifest)
        .env("CARGO_TARGET_DIR", &target)
        .status()
        .expect("cargo available");
    assert!(build.success(), "building the static library failed");
    let lib = target.join("debug/liblzheom_ffi.a");
    assert!(lib.is_file(), "static library not found at {}", lib.display());

    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let src = dir.join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "lzheom.h"
int main(void) {
    LzConfig *cfg = NULL;
    LzTrace *trace = NULL;
    if (lz_config_parse("protocol = lz_cd\ntf = 1\ngamma = 0.5\ndepth = 4\n", &cfg) != LZ_STATUS_OK) return 1;
    if (lz_evolve(cfg, &trace) != LZ_STATUS_OK) return 2;
    double f = lz_trace_final_fidelity(trace);
    size_t n = lz_trace_len(trace);
    lz_trace_free(trace);
    lz_config_free(cfg);
    if (lz_config_parse("tf = oops\n", &cfg) != LZ_STATUS_CONFIG) return 3;
    printf("%zu %.6f %s\n", n, f, lz_last_error());
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.join("smoke");
    let cc = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .expect("C compiler available");
    assert!(cc.status.success(), "{}", String::from_utf8_lossy(&cc.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let out = String::from_utf8_lossy(&run.stdout);
    assert!(out.starts_with("1001 0.9"), "{out}");
    assert!(out.contains("config line 1"), "{out}");
}
