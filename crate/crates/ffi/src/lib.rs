//! C ABI over the elastic-cgo engine.
//!
//! Every fallible call returns an [`EcgoStatus`]; on failure the message is
//! kept per thread and read back with [`ecgo_last_error`]. Handles are
//! opaque and owned by the caller, who releases them with the matching
//! `_free` function.
//!
//! # Safety
//!
//! Pointer arguments must be null or valid for the access the function
//! documents; handles must come from this library and be freed once.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use elastic_cgo::config::ExperimentConfig;
use elastic_cgo::field_io::FieldSet;
use elastic_cgo::pipeline::{self, RunReport};
use elastic_cgo::verify::{cmd_verify_cgo, cmd_verify_identities};
use elastic_cgo::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcgoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Io = 4,
    Numerical = 5,
    NotFound = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Experiment configuration.
pub struct EcgoConfig {
    inner: ExperimentConfig,
}

/// Truth, reconstruction and error table of one forward/inverse run.
pub struct EcgoRun {
    truth: FieldSet,
    fields: FieldSet,
    report: RunReport,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: EcgoStatus, msg: impl Into<String>) -> EcgoStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn from_error(e: Error) -> EcgoStatus {
    let status = match e {
        Error::Config(_) | Error::InvalidBackground(_) | Error::Json(_) => EcgoStatus::InvalidConfig,
        Error::Io(_) => EcgoStatus::Io,
        Error::Mismatch(_) | Error::Precondition(_) => EcgoStatus::InvalidArgument,
        _ => EcgoStatus::Numerical,
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning panics into `Panic` and clearing the message on success.
fn guard(f: impl FnOnce() -> Result<(), EcgoStatus>) -> EcgoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| e.borrow_mut().clear());
            EcgoStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(EcgoStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, EcgoStatus> {
    if p.is_null() {
        return Err(fail(EcgoStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(EcgoStatus::InvalidArgument, "string is not UTF-8"))
}

unsafe fn out_arg<'a, T>(p: *mut T) -> Result<&'a mut T, EcgoStatus> {
    p.as_mut()
        .ok_or_else(|| fail(EcgoStatus::NullPointer, "null output pointer"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, EcgoStatus> {
    p.as_ref().ok_or_else(|| fail(EcgoStatus::NullPointer, "null handle"))
}

/// Copies the last error message of this thread into `buf` (NUL terminated,
/// truncated to `len`). Returns the full message length in bytes, without
/// the terminator.
#[no_mangle]
pub unsafe extern "C" fn ecgo_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ecgo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default static configuration.
#[no_mangle]
pub unsafe extern "C" fn ecgo_config_default(out: *mut *mut EcgoConfig) -> EcgoStatus {
    guard(|| {
        *out_arg(out)? = Box::into_raw(Box::new(EcgoConfig {
            inner: ExperimentConfig::default(),
        }));
        Ok(())
    })
}

/// Default configuration at two positive frequencies, with density.
#[no_mangle]
pub unsafe extern "C" fn ecgo_config_two_frequency(out: *mut *mut EcgoConfig) -> EcgoStatus {
    guard(|| {
        *out_arg(out)? = Box::into_raw(Box::new(EcgoConfig {
            inner: ExperimentConfig::two_frequency(),
        }));
        Ok(())
    })
}

/// Parses and validates a JSON configuration; missing keys take defaults.
#[no_mangle]
pub unsafe extern "C" fn ecgo_config_from_json(json: *const c_char, out: *mut *mut EcgoConfig) -> EcgoStatus {
    guard(|| {
        let out = out_arg(out)?;
        let cfg: ExperimentConfig =
            serde_json::from_str(str_arg(json)?).map_err(|e| fail(EcgoStatus::InvalidConfig, e.to_string()))?;
        cfg.validate().map_err(from_error)?;
        *out = Box::into_raw(Box::new(EcgoConfig { inner: cfg }));
        Ok(())
    })
}

/// Sets the spatial and frequency grid sizes per axis.
#[no_mangle]
pub unsafe extern "C" fn ecgo_config_set_grid(cfg: *mut EcgoConfig, spatial_n: usize, freq_n: usize) -> EcgoStatus {
    guard(|| {
        let cfg = out_arg(cfg)?;
        let mut next = cfg.inner.clone();
        next.spatial_n = spatial_n;
        next.freq_n = freq_n;
        next.validate().map_err(from_error)?;
        cfg.inner = next;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ecgo_config_free(cfg: *mut EcgoConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the Navier residual checks; `passed` receives 1 or 0.
#[no_mangle]
pub unsafe extern "C" fn ecgo_verify_cgo(cfg: *const EcgoConfig, passed: *mut i32) -> EcgoStatus {
    guard(|| {
        let cfg = handle(cfg)?;
        let passed = out_arg(passed)?;
        *passed = cmd_verify_cgo(&cfg.inner).map_err(from_error)?.pass as i32;
        Ok(())
    })
}

/// Runs the closed-form and algebraic identity checks; `passed` receives 1 or 0.
#[no_mangle]
pub unsafe extern "C" fn ecgo_verify_identities(cfg: *const EcgoConfig, passed: *mut i32) -> EcgoStatus {
    guard(|| {
        let cfg = handle(cfg)?;
        let passed = out_arg(passed)?;
        *passed = cmd_verify_identities(&cfg.inner).map_err(from_error)?.pass as i32;
        Ok(())
    })
}

/// Synthesizes data from the configured phantom and reconstructs it.
#[no_mangle]
pub unsafe extern "C" fn ecgo_run(cfg: *const EcgoConfig, out: *mut *mut EcgoRun) -> EcgoStatus {
    guard(|| {
        let cfg = &handle(cfg)?.inner;
        let out = out_arg(out)?;
        let data = pipeline::forward(cfg).map_err(from_error)?;
        let rec = pipeline::reconstruct_bundle(cfg, &data).map_err(from_error)?;
        let truth = pipeline::truth_fields(cfg).map_err(from_error)?;
        let fields = pipeline::reconstruction_fields(&rec).map_err(from_error)?;
        let report = pipeline::report(&truth, &fields, Some(rec.diagnostics)).map_err(from_error)?;
        *out = Box::into_raw(Box::new(EcgoRun { truth, fields, report }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ecgo_run_free(run: *mut EcgoRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of values in each field of the run.
#[no_mangle]
pub unsafe extern "C" fn ecgo_run_field_len(run: *const EcgoRun, len: *mut usize) -> EcgoStatus {
    guard(|| {
        *out_arg(len)? = handle(run)?.fields.grid.len();
        Ok(())
    })
}

/// Relative L² error of one component, e.g. `"c1313"` or `"rho11"`.
#[no_mangle]
pub unsafe extern "C" fn ecgo_run_rel_l2(run: *const EcgoRun, component: *const c_char, value: *mut f64) -> EcgoStatus {
    guard(|| {
        let run = handle(run)?;
        let name = str_arg(component)?;
        let value = out_arg(value)?;
        let row = run
            .report
            .errors
            .row(name)
            .ok_or_else(|| fail(EcgoStatus::NotFound, format!("no component {name}")))?;
        *value = row.rel_l2;
        Ok(())
    })
}

unsafe fn copy_field(set: &FieldSet, component: *const c_char, buf: *mut f64, len: usize) -> Result<(), EcgoStatus> {
    let name = str_arg(component)?;
    let src = set
        .get(name)
        .ok_or_else(|| fail(EcgoStatus::NotFound, format!("no component {name}")))?;
    if buf.is_null() {
        return Err(fail(EcgoStatus::NullPointer, "null buffer"));
    }
    if len < src.len() {
        return Err(fail(
            EcgoStatus::BufferTooSmall,
            format!("buffer holds {len} values, field has {}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Copies a reconstructed component into `buf`, laid out as the grid's
/// flat index (x slowest).
#[no_mangle]
pub unsafe extern "C" fn ecgo_run_field(
    run: *const EcgoRun,
    component: *const c_char,
    buf: *mut f64,
    len: usize,
) -> EcgoStatus {
    guard(|| copy_field(&handle(run)?.fields, component, buf, len))
}

/// Copies a ground-truth component into `buf`.
#[no_mangle]
pub unsafe extern "C" fn ecgo_run_truth(
    run: *const EcgoRun,
    component: *const c_char,
    buf: *mut f64,
    len: usize,
) -> EcgoStatus {
    guard(|| copy_field(&handle(run)?.truth, component, buf, len))
}
