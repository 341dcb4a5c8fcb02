//! C ABI over the conflictlens engine.
//!
//! Scenarios and reports are opaque handles owned by the caller and
//! released with their `*_free` function. Fallible calls return a
//! [`ClStatus`]; the message of the last failure on the calling thread is
//! available from [`cl_last_error`]. Strings returned as `char *` are owned
//! by the caller and released with [`cl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use conflictlens::cli::exit_code;
use conflictlens::conflict::{explain, find_strategy, AnalysisConfig, ConflictReport, ResolutionLevel};
use conflictlens::sat;
use conflictlens::scenario::{self, Compiled, Scenario};

/// Outcome of a fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The scenario or CNF text was rejected, or an argument is out of range.
    InvalidInput = 3,
    /// The analysis itself failed, e.g. a strategy bound was exceeded.
    AnalysisFailed = 4,
    /// An internal error was caught at the boundary.
    Internal = 5,
}

/// A validated, compiled scenario.
pub struct ClScenario {
    compiled: Compiled,
}

/// The result of analysing a scenario.
pub struct ClReport {
    report: ConflictReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs `f` behind the boundary: clears the last error, turns errors and
/// panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (ClStatus, String)>) -> ClStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ClStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error");
            ClStatus::Internal
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (ClStatus, String)> {
    if p.is_null() {
        return Err((ClStatus::NullArgument, format!("{what} is NULL")));
    }
    CStr::from_ptr(p).to_str().map_err(|e| (ClStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn owned(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

fn load(text: &str, horizon: i64) -> Result<Box<ClScenario>, (ClStatus, String)> {
    let bad = |e: scenario::ScenarioError| (ClStatus::InvalidInput, e.to_string());
    let sc = Scenario::load(text).map_err(bad)?;
    let h = usize::try_from(horizon).ok();
    let compiled = sc.compile(h).map_err(bad)?;
    Ok(Box::new(ClScenario { compiled }))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn cl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn cl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses, validates and compiles scenario text. A negative `horizon`
/// keeps the declared one.
///
/// # Safety
/// `text` must be NULL or a NUL-terminated string; `out` must be NULL or
/// point to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn cl_scenario_parse(text: *const c_char, horizon: i64, out: *mut *mut ClScenario) -> ClStatus {
    guard(|| {
        if out.is_null() {
            return Err((ClStatus::NullArgument, "out is NULL".into()));
        }
        *out = ptr::null_mut();
        let t = read_str(text, "text")?;
        *out = Box::into_raw(load(t, horizon)?);
        Ok(())
    })
}

/// Loads one of the bundled scenarios by name, e.g. `highway_ex4`.
///
/// # Safety
/// As for [`cl_scenario_parse`].
#[no_mangle]
pub unsafe extern "C" fn cl_scenario_fixture(name: *const c_char, horizon: i64, out: *mut *mut ClScenario) -> ClStatus {
    guard(|| {
        if out.is_null() {
            return Err((ClStatus::NullArgument, "out is NULL".into()));
        }
        *out = ptr::null_mut();
        let n = read_str(name, "name")?;
        let t = scenario::fixture(n).ok_or_else(|| (ClStatus::InvalidInput, format!("no bundled scenario `{n}`")))?;
        *out = Box::into_raw(load(t, horizon)?);
        Ok(())
    })
}

/// Horizon the scenario was compiled with, 0 for NULL.
///
/// # Safety
/// `sc` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cl_scenario_horizon(sc: *const ClScenario) -> usize {
    sc.as_ref().map_or(0, |s| s.compiled.problem.model.horizon)
}

/// # Safety
/// `sc` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cl_scenario_free(sc: *mut ClScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Analyses a scenario. `max_level` 1 to 4 allows resolution up to C1..C4;
/// 0 only detects. `strategy_bound` 0 keeps the default.
///
/// # Safety
/// `sc` must be NULL or a live handle; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn cl_resolve(
    sc: *const ClScenario,
    max_level: u32,
    strategy_bound: usize,
    out: *mut *mut ClReport,
) -> ClStatus {
    guard(|| {
        if out.is_null() {
            return Err((ClStatus::NullArgument, "out is NULL".into()));
        }
        *out = ptr::null_mut();
        let sc = sc.as_ref().ok_or((ClStatus::NullArgument, "scenario is NULL".to_string()))?;
        let max_level = match max_level {
            0 => None,
            n @ 1..=4 => Some(ResolutionLevel::ALL[n as usize - 1]),
            n => return Err((ClStatus::InvalidInput, format!("max_level {n} is not in 0..4"))),
        };
        let mut cfg = AnalysisConfig { max_level, ..AnalysisConfig::default() };
        if strategy_bound > 0 {
            cfg.strategy_bound = strategy_bound;
        }
        let report = find_strategy(&sc.compiled.problem, &sc.compiled.base, &cfg)
            .map_err(|e| (ClStatus::AnalysisFailed, e.to_string()))?;
        *out = Box::into_raw(Box::new(ClReport { report }));
        Ok(())
    })
}

/// 0 no conflict, 1 resolved, 2 unresolved (the CLI's exit codes); -1 for
/// NULL.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cl_report_verdict(r: *const ClReport) -> i32 {
    r.as_ref().map_or(-1, |r| exit_code(r.report.verdict))
}

/// Level the conflict was resolved at, 1 to 4; 0 if none; -1 for NULL.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cl_report_level(r: *const ClReport) -> i32 {
    r.as_ref().map_or(-1, |r| r.report.level.map_or(0, |l| l as i32 + 1))
}

/// Number of surviving strategies.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cl_report_strategy_count(r: *const ClReport) -> usize {
    r.as_ref().map_or(0, |r| r.report.strategy_count)
}

/// Number of conflict causes over all rounds.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cl_report_cause_count(r: *const ClReport) -> usize {
    r.as_ref().map_or(0, |r| r.report.causes.len())
}

/// The report as JSON, or NULL for NULL.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cl_report_json(r: *const ClReport) -> *mut c_char {
    r.as_ref().map_or(ptr::null_mut(), |r| owned(r.report.to_json()))
}

/// The justification chain as JSON, or NULL for NULL.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cl_explain_json(r: *const ClReport) -> *mut c_char {
    r.as_ref().map_or(ptr::null_mut(), |r| owned(explain(&r.report).to_json()))
}

/// The justification chain as text, or NULL for NULL.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cl_explain_text(r: *const ClReport) -> *mut c_char {
    r.as_ref().map_or(ptr::null_mut(), |r| owned(explain(&r.report).text))
}

/// # Safety
/// `r` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cl_report_free(r: *mut ClReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Seed of the SAT solver's initial activities for later calls in this
/// process. Results do not depend on it.
#[no_mangle]
pub extern "C" fn cl_set_seed(seed: u64) {
    sat::set_default_seed(seed);
}

/// Decides a DIMACS CNF. On success `*out_sat` is true iff satisfiable.
///
/// # Safety
/// `dimacs` must be NULL or a NUL-terminated string; `out_sat` must be NULL
/// or writable.
#[no_mangle]
pub unsafe extern "C" fn cl_solve_dimacs(dimacs: *const c_char, out_sat: *mut bool) -> ClStatus {
    guard(|| {
        if out_sat.is_null() {
            return Err((ClStatus::NullArgument, "out_sat is NULL".into()));
        }
        let t = read_str(dimacs, "dimacs")?;
        let cnf = sat::parse_dimacs(t).map_err(|e| (ClStatus::InvalidInput, e.to_string()))?;
        let res = sat::solve(&cnf, &[]).map_err(|e| (ClStatus::InvalidInput, e.to_string()))?;
        *out_sat = res.is_sat();
        Ok(())
    })
}
