//! C ABI over the run harness.
//!
//! Configurations and run results are opaque handles created and released through
//! this interface. Every fallible call returns an [`FsiStatus`]; on failure the
//! message is available from [`fsi_last_error`] on the same thread. Strings handed
//! out by the library are released with [`fsi_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use fsi_core::harness::{self, HarnessError, RunConfig, RunOutcome, CSV_HEADER};

/// Status codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Solver = 4,
    Checkpoint = 5,
    Io = 6,
    OutOfRange = 7,
    Panic = 8,
}

/// A run configuration.
pub struct FsiConfig(RunConfig);

/// The outcome of a finished run.
pub struct FsiRun(RunOutcome);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(FsiStatus, String);

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let status = match e {
            HarnessError::Config(_) => FsiStatus::Config,
            HarnessError::Solver(_) => FsiStatus::Solver,
            HarnessError::Checkpoint(_) => FsiStatus::Checkpoint,
            HarnessError::Io(_) => FsiStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> FsiStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => FsiStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FsiStatus::Panic
        }
    }
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure(FsiStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Failure(FsiStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(FsiStatus::NullPointer, format!("{what} is null")))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure(FsiStatus::NullPointer, format!("{what} is null")))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(FsiStatus::NullPointer, "output pointer is null".into()));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn emit_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(FsiStatus::NullPointer, "output pointer is null".into()));
    }
    *out = CString::new(s).map_err(|e| Failure(FsiStatus::InvalidUtf8, e.to_string()))?.into_raw();
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn fsi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn fsi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn fsi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub unsafe extern "C" fn fsi_config_default(out: *mut *mut FsiConfig) -> FsiStatus {
    guard(|| emit(out, FsiConfig(RunConfig::default())))
}

/// One of the named presets, for example `"benign"` or `"inflating"`.
#[no_mangle]
pub unsafe extern "C" fn fsi_config_preset(name: *const c_char, out: *mut *mut FsiConfig) -> FsiStatus {
    guard(|| emit(out, FsiConfig(RunConfig::preset(text(name, "preset name")?)?)))
}

#[no_mangle]
pub unsafe extern "C" fn fsi_config_from_json(json: *const c_char, out: *mut *mut FsiConfig) -> FsiStatus {
    guard(|| emit(out, FsiConfig(RunConfig::from_json(text(json, "json")?)?)))
}

#[no_mangle]
pub unsafe extern "C" fn fsi_config_load(path: *const c_char, out: *mut *mut FsiConfig) -> FsiStatus {
    guard(|| emit(out, FsiConfig(RunConfig::load(text(path, "path")?.as_ref())?)))
}

/// Pretty-printed JSON of the configuration; release with [`fsi_string_free`].
#[no_mangle]
pub unsafe extern "C" fn fsi_config_to_json(config: *const FsiConfig, out: *mut *mut c_char) -> FsiStatus {
    guard(|| emit_string(out, handle(config, "config")?.0.to_json()))
}

/// Hex digest identifying the configuration, output directory excluded.
#[no_mangle]
pub unsafe extern "C" fn fsi_config_hash(config: *const FsiConfig, out: *mut *mut c_char) -> FsiStatus {
    guard(|| emit_string(out, handle(config, "config")?.0.hash_hex()))
}

#[no_mangle]
pub unsafe extern "C" fn fsi_config_set_seed(config: *mut FsiConfig, seed: u64) -> FsiStatus {
    guard(|| {
        handle_mut(config, "config")?.0.seed = seed;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsi_config_set_horizon(config: *mut FsiConfig, steps: usize) -> FsiStatus {
    guard(|| {
        handle_mut(config, "config")?.0.horizon = steps;
        Ok(())
    })
}

/// Directory for diagnostics, dumps, checkpoints and the summary; null keeps the
/// run in memory.
#[no_mangle]
pub unsafe extern "C" fn fsi_config_set_output_dir(config: *mut FsiConfig, dir: *const c_char) -> FsiStatus {
    guard(|| {
        let dir = if dir.is_null() { None } else { Some(PathBuf::from(text(dir, "dir")?)) };
        handle_mut(config, "config")?.0.output.dir = dir;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsi_config_free(config: *mut FsiConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Checks the start data; `passed` receives the overall verdict and `report`, when
/// not null, the per-check JSON report.
#[no_mangle]
pub unsafe extern "C" fn fsi_validate(config: *const FsiConfig, passed: *mut bool, report: *mut *mut c_char) -> FsiStatus {
    guard(|| {
        let r = harness::validate_dataset(&handle(config, "config")?.0)?;
        *handle_mut(passed, "passed")? = r.passed;
        if !report.is_null() {
            emit_string(report, serde_json::to_string(&r).expect("report serializes"))?;
        }
        Ok(())
    })
}

/// Runs the configured scenario. Solver failures still produce a run whose exit
/// code is nonzero; see [`fsi_run_exit_code`].
#[no_mangle]
pub unsafe extern "C" fn fsi_run(config: *const FsiConfig, out: *mut *mut FsiRun) -> FsiStatus {
    guard(|| emit(out, FsiRun(harness::run(&handle(config, "config")?.0)?)))
}

/// Continues from a checkpoint file; `out_dir` may be null.
#[no_mangle]
pub unsafe extern "C" fn fsi_resume(checkpoint: *const c_char, out_dir: *const c_char, out: *mut *mut FsiRun) -> FsiStatus {
    guard(|| {
        let path = PathBuf::from(text(checkpoint, "checkpoint")?);
        let dir = if out_dir.is_null() { None } else { Some(PathBuf::from(text(out_dir, "out_dir")?)) };
        emit(out, FsiRun(harness::resume(&path, dir.as_deref())?))
    })
}

/// 0 for a clean run, 1 when the run recorded an error; -1 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn fsi_run_exit_code(run: *const FsiRun) -> i32 {
    run.as_ref().map_or(-1, |r| r.0.exit_code())
}

/// Time steps completed, counted from the original start.
#[no_mangle]
pub unsafe extern "C" fn fsi_run_steps(run: *const FsiRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.summary.steps)
}

/// Diagnostic rows held by the run, the start row included for fresh runs.
#[no_mangle]
pub unsafe extern "C" fn fsi_run_rows(run: *const FsiRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.rows.len())
}

/// Copies the diagnostics column `name`, one of the CSV header names, into `values`
/// (at least [`fsi_run_rows`] entries). Empty entries become NaN.
#[no_mangle]
pub unsafe extern "C" fn fsi_run_column(run: *const FsiRun, name: *const c_char, values: *mut f64, len: usize) -> FsiStatus {
    guard(|| {
        let run = &handle(run, "run")?.0;
        let name = text(name, "column name")?;
        let Some(col) = CSV_HEADER.split(',').position(|h| h == name) else {
            return Err(Failure(FsiStatus::OutOfRange, format!("no diagnostics column `{name}`")));
        };
        if values.is_null() {
            return Err(Failure(FsiStatus::NullPointer, "values is null".into()));
        }
        if len < run.rows.len() {
            return Err(Failure(FsiStatus::OutOfRange, format!("buffer holds {len} of {} rows", run.rows.len())));
        }
        let out = std::slice::from_raw_parts_mut(values, run.rows.len());
        for (v, row) in out.iter_mut().zip(&run.rows) {
            let line = row.to_csv();
            *v = line.split(',').nth(col).and_then(|s| s.parse().ok()).unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// The run summary as JSON; release with [`fsi_string_free`].
#[no_mangle]
pub unsafe extern "C" fn fsi_run_summary_json(run: *const FsiRun, out: *mut *mut c_char) -> FsiStatus {
    guard(|| emit_string(out, serde_json::to_string_pretty(&handle(run, "run")?.0.summary).expect("summary serializes")))
}

#[no_mangle]
pub unsafe extern "C" fn fsi_run_free(run: *mut FsiRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
