//! C ABI over `lzheom`.
//!
//! Configurations and traces live behind opaque handles that the caller
//! frees with the matching `*_free` function. Every fallible call returns an
//! [`LzStatus`]; on failure a message is available from
//! [`lz_last_error`] on the same thread until the next failing call.
//! Panics never cross the boundary, they surface as [`LzStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lzheom::experiment::{oracle_report, solve, Solve, Verdict};
use lzheom::{parse_config, Error, FidelityTrace, RunConfig};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// malformed configuration text; the message names the line
    Config = 3,
    InvalidArgument = 4,
    /// non-finite state, unconverged hierarchy or unphysical density matrix
    Numerical = 5,
    Io = 6,
    Panic = 7,
}

/// Outcome of [`lz_oracle_check`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LzVerdict {
    Pass = 0,
    Fail = 1,
    /// the pseudomode reference stayed limited by its Fock cutoff
    Inconclusive = 2,
}

/// Parsed run configuration.
pub struct LzConfig(RunConfig);

/// Sampled fidelity trace of one evolution.
pub struct LzTrace {
    trace: FidelityTrace,
    depth_used: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> LzStatus {
    match e {
        Error::Config { .. } => LzStatus::Config,
        Error::Io(_) => LzStatus::Io,
        e if e.is_numerical() => LzStatus::Numerical,
        _ => LzStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), (LzStatus, String)>) -> LzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LzStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LzStatus::Panic
        }
    }
}

fn fail(e: Error) -> (LzStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (LzStatus, String) {
    (LzStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (LzStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failure on this thread, or null if none. The pointer
/// stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn lz_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a `key = value` configuration document.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn lz_config_parse(text: *const c_char, out: *mut *mut LzConfig) -> LzStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| (LzStatus::InvalidUtf8, e.to_string()))?;
        let cfg = parse_config(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(LzConfig(cfg)));
        Ok(())
    })
}

/// Releases a configuration. Null is ignored.
///
/// # Safety
/// `cfg` must come from [`lz_config_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lz_config_free(cfg: *mut LzConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Overrides the coupling strength γ.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn lz_config_set_gamma(cfg: *mut LzConfig, gamma: f64) -> LzStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let mut next = cfg.0.clone();
        next.bath.gamma = gamma;
        next.simulation().map_err(fail)?;
        cfg.0 = next;
        Ok(())
    })
}

/// Overrides the hierarchy depth.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn lz_config_set_depth(cfg: *mut LzConfig, depth: usize) -> LzStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let mut next = cfg.0.clone();
        next.depth = depth;
        next.simulation().map_err(fail)?;
        cfg.0 = next;
        Ok(())
    })
}

unsafe fn evolve_into(cfg: *const LzConfig, how: Solve, out: *mut *mut LzTrace) -> LzStatus {
    guard(|| {
        let cfg = deref(cfg, "cfg")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sim = cfg.0.simulation().map_err(fail)?;
        let solved = solve(&sim, how).map_err(fail)?;
        *out = Box::into_raw(Box::new(LzTrace {
            trace: solved.trace,
            depth_used: solved.depth_used,
        }));
        Ok(())
    })
}

/// Evolves the configuration at its own depth and step.
///
/// # Safety
/// `cfg` must be a live configuration handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lz_evolve(cfg: *const LzConfig, out: *mut *mut LzTrace) -> LzStatus {
    evolve_into(cfg, Solve::Fixed, out)
}

/// Evolves after raising the depth until the fidelity trace changes by less
/// than `tol`, up to `max_depth`, and checking the step by halving it.
///
/// # Safety
/// `cfg` must be a live configuration handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lz_evolve_converged(
    cfg: *const LzConfig,
    tol: f64,
    max_depth: usize,
    out: *mut *mut LzTrace,
) -> LzStatus {
    evolve_into(cfg, Solve::Converge { tol, max_depth }, out)
}

/// Releases a trace. Null is ignored.
///
/// # Safety
/// `trace` must come from an evolve call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lz_trace_free(trace: *mut LzTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn lz_trace_len(trace: *const LzTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.times.len())
}

/// Sample times; `lz_trace_len` entries, owned by the trace.
///
/// # Safety
/// `trace` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn lz_trace_times(trace: *const LzTrace) -> *const f64 {
    trace.as_ref().map_or(ptr::null(), |t| t.trace.times.as_ptr())
}

/// Survival fidelity at each sample; `lz_trace_len` entries, owned by the
/// trace.
///
/// # Safety
/// `trace` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn lz_trace_fidelity(trace: *const LzTrace) -> *const f64 {
    trace.as_ref().map_or(ptr::null(), |t| t.trace.fidelity.as_ptr())
}

/// Fidelity at the last sample, NaN for a null or empty trace.
///
/// # Safety
/// `trace` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn lz_trace_final_fidelity(trace: *const LzTrace) -> f64 {
    trace
        .as_ref()
        .and_then(|t| t.trace.fidelity.last().copied())
        .unwrap_or(f64::NAN)
}

/// Hierarchy depth the trace was computed at.
///
/// # Safety
/// `trace` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn lz_trace_depth_used(trace: *const LzTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.depth_used)
}

/// Copies the reduced density matrix at sample `index` into `out` as eight
/// doubles: row-major entries, each as (re, im).
///
/// # Safety
/// `trace` must be a live trace handle and `out` must hold 8 doubles.
#[no_mangle]
pub unsafe extern "C" fn lz_trace_state(trace: *const LzTrace, index: usize, out: *mut f64) -> LzStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let rho = t.trace.states.get(index).ok_or_else(|| {
            (
                LzStatus::InvalidArgument,
                format!("sample {index} out of range ({} samples)", t.trace.states.len()),
            )
        })?;
        let out = std::slice::from_raw_parts_mut(out, 8);
        for (k, z) in rho.0.iter().enumerate() {
            out[2 * k] = z.re;
            out[2 * k + 1] = z.im;
        }
        Ok(())
    })
}

/// Compares the hierarchy against the pseudomode reference with the
/// configuration's depth and Fock cutoff. Writes the verdict and the largest
/// trace distance between the two reduced states.
///
/// # Safety
/// `cfg` must be a live configuration handle; `verdict` and `distance` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn lz_oracle_check(
    cfg: *const LzConfig,
    tol: f64,
    verdict: *mut LzVerdict,
    distance: *mut f64,
) -> LzStatus {
    guard(|| {
        let cfg = deref(cfg, "cfg")?;
        if verdict.is_null() || distance.is_null() {
            return Err(null("verdict or distance"));
        }
        if !(cfg.0.bath.gamma > 0.0) {
            return Err((LzStatus::InvalidArgument, "oracle check needs gamma > 0".into()));
        }
        let sim = cfg.0.simulation().map_err(fail)?;
        let report = oracle_report(&sim, cfg.0.n_fock, tol).map_err(fail)?;
        *verdict = match report.verdict {
            Verdict::Pass => LzVerdict::Pass,
            Verdict::Fail => LzVerdict::Fail,
            Verdict::Inconclusive => LzVerdict::Inconclusive,
        };
        *distance = report.comparison.max_trace_distance;
        Ok(())
    })
}

/// Infinite-sweep Landau-Zener survival probability `1 − exp(−πX²/2v)`.
#[no_mangle]
pub extern "C" fn lz_probability(x: f64, v: f64) -> f64 {
    lzheom::lz_probability(x, v)
}

/// Zero-temperature infinite-sweep fidelity with gap `X² + γ`.
#[no_mangle]
pub extern "C" fn lz_wubs_asymptotic(x: f64, gamma: f64, v: f64) -> f64 {
    lzheom::wubs_asymptotic(x, gamma, v)
}
