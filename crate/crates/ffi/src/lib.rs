//! C ABI over the tuning library: opaque handles, integer status codes, and
//! a thread-local last-error message.
//!
//! Conventions: every fallible function returns `EscStatus` and, on failure,
//! stores a message readable via `esc_last_error` until the next failure on
//! the same thread. Out-pointers are written only on `ESC_STATUS_OK`.
//! Strings returned through out-pointers are released with
//! `esc_string_free`, handles with their `_free` function. Handles are not
//! synchronized; sharing one across threads needs external locking.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use esc_core::artifacts::{calls_csv, curve_csv, save_run, sha256_hex, ResultDoc};
use esc_core::generate::{generate_workload, GeneratorSpec};
use esc_core::metrics::{evaluate, RunView};
use esc_core::sweep::default_scheme;
use esc_core::esv::Scheme;
use esc_core::tuner::{tune, AlgoKind, EscMode, Termination, TuneOptions, TuningResult, WiiMode};
use esc_core::workload::{Instance, Workload};
use esc_core::EscError;

/// Status of one call. A verification status means a mathematical contract
/// of the tuner was broken; anything else wrong with inputs or I/O is a
/// validation status.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EscStatus {
    Ok = 0,
    InvalidArgument = 1,
    Validation = 2,
    Verification = 3,
}

/// A validated workload and everything derived from it.
pub struct EscWorkload {
    inst: Instance,
    digest: String,
}

/// One finished tuning run, tied to the workload it was produced from.
pub struct EscRun {
    opts: TuneOptions,
    result: TuningResult,
    digest: String,
}

/// Tuning options in C-friendly form. Integer selectors out of range are
/// rejected with `ESC_STATUS_INVALID_ARGUMENT`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EscOptions {
    /// 0 two-phase greedy, 1 MCTS.
    pub algorithm: u32,
    /// What-if call interception: 0 off, 1 bound, 2 coverage.
    pub wii: u32,
    /// Early stopping: 0 off, 1 raw bounds, 2 interaction-refined bounds.
    pub esc: u32,
    /// Verification scheme: 0 algorithm default, 1 heuristic, 2 generic,
    /// 3 fixed-step.
    pub esvs: u32,
    /// Improvement-loss tolerance in (0,1).
    pub epsilon: f64,
    /// What-if call budget.
    pub budget: u64,
    /// Configuration size cap K.
    pub k: u64,
    /// Verification grid step, in what-if calls.
    pub step: u64,
    /// Concavity-significance threshold in (0,1).
    pub sigma: f64,
    /// Feature-similarity threshold in [0,1].
    pub tau: f64,
    /// Interception gap threshold, fraction of a query's base cost.
    pub theta: f64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn invalid(message: &str) -> EscStatus {
    set_error(message);
    EscStatus::InvalidArgument
}

fn from_error(err: EscError) -> EscStatus {
    let status = match err {
        EscError::ContractViolation(_) => EscStatus::Verification,
        _ => EscStatus::Validation,
    };
    set_error(&err.to_string());
    status
}

/// # Safety
/// `ptr` must be null or a NUL-terminated string.
unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, EscStatus> {
    if ptr.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| invalid(&format!("{what} is not valid UTF-8")))
}

fn write_string(text: String, out: *mut *mut c_char) -> EscStatus {
    if out.is_null() {
        return invalid("output pointer is null");
    }
    let c = CString::new(text.replace('\0', " ")).unwrap_or_default();
    unsafe { *out = c.into_raw() };
    EscStatus::Ok
}

fn workload_digest(workload: &Workload) -> Result<String, EscError> {
    let mut text = workload.to_json()?;
    text.push('\n');
    Ok(sha256_hex(&text))
}

fn wrap_workload(workload: Workload, out: *mut *mut EscWorkload) -> EscStatus {
    if out.is_null() {
        return invalid("output pointer is null");
    }
    let digest = match workload_digest(&workload) {
        Ok(d) => d,
        Err(e) => return from_error(e),
    };
    match Instance::new(workload) {
        Ok(inst) => {
            let handle = Box::new(EscWorkload { inst, digest });
            unsafe { *out = Box::into_raw(handle) };
            EscStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

fn to_tune_options(o: &EscOptions) -> Result<TuneOptions, EscStatus> {
    let algorithm = match o.algorithm {
        0 => AlgoKind::TwoPhaseGreedy,
        1 => AlgoKind::Mcts,
        v => return Err(invalid(&format!("algorithm selector {v} out of range"))),
    };
    let wii = match o.wii {
        0 => WiiMode::Off,
        1 => WiiMode::Bound,
        2 => WiiMode::Coverage,
        v => return Err(invalid(&format!("wii selector {v} out of range"))),
    };
    let esc = match o.esc {
        0 => EscMode::Off,
        1 => EscMode::B,
        2 => EscMode::I,
        v => return Err(invalid(&format!("esc selector {v} out of range"))),
    };
    let scheme = match o.esvs {
        0 => default_scheme(algorithm),
        1 => Scheme::Heuristic,
        2 => Scheme::Generic,
        3 => Scheme::FixedStep,
        v => return Err(invalid(&format!("esvs selector {v} out of range"))),
    };
    Ok(TuneOptions {
        algorithm,
        wii,
        esc,
        scheme,
        epsilon: o.epsilon,
        budget: o.budget,
        k: o.k as usize,
        step: o.step,
        sigma: o.sigma,
        tau: o.tau,
        theta: o.theta,
        seed: o.seed,
    })
}

/// Checks that `run` was produced from `workload`; everything combining the
/// two handles depends on it.
fn same_workload(w: &EscWorkload, r: &EscRun) -> Result<(), EscStatus> {
    if w.digest == r.digest {
        Ok(())
    } else {
        set_error("run was produced from a different workload");
        Err(EscStatus::Validation)
    }
}

/// Message of the most recent failure on this thread. Empty string when no
/// failure happened yet; valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn esc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Releases a string returned through an out-pointer.
///
/// # Safety
/// `s` must be null or a string previously returned by this library.
#[no_mangle]
pub unsafe extern "C" fn esc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Generates a workload from a preset name ("tpch-like"), a generator spec
/// JSON file path, or inline generator spec JSON.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn esc_workload_generate(
    spec: *const c_char,
    seed: u64,
    out: *mut *mut EscWorkload,
) -> EscStatus {
    let spec = match read_str(spec, "spec") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let parsed = if spec.trim_start().starts_with('{') {
        serde_json::from_str::<GeneratorSpec>(spec).map_err(EscError::from)
    } else {
        GeneratorSpec::resolve(spec)
    };
    let spec = match parsed {
        Ok(s) => s,
        Err(e) => return from_error(e),
    };
    match generate_workload(&spec, seed) {
        Ok(w) => wrap_workload(w, out),
        Err(e) => from_error(e),
    }
}

/// Parses and validates a workload document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn esc_workload_from_json(
    json: *const c_char,
    out: *mut *mut EscWorkload,
) -> EscStatus {
    let json = match read_str(json, "json") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match Workload::from_json(json) {
        Ok(w) => wrap_workload(w, out),
        Err(e) => from_error(e),
    }
}

/// Serializes the workload document.
///
/// # Safety
/// `w` must be a live workload handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn esc_workload_to_json(
    w: *const EscWorkload,
    out: *mut *mut c_char,
) -> EscStatus {
    let Some(w) = w.as_ref() else {
        return invalid("workload handle is null");
    };
    match w.inst.workload.to_json() {
        Ok(text) => write_string(text, out),
        Err(e) => from_error(e),
    }
}

/// Number of queries; 0 for a null handle.
///
/// # Safety
/// `w` must be null or a live workload handle.
#[no_mangle]
pub unsafe extern "C" fn esc_workload_query_count(w: *const EscWorkload) -> u64 {
    w.as_ref().map_or(0, |w| w.inst.query_count() as u64)
}

/// Number of candidate indexes; 0 for a null handle.
///
/// # Safety
/// `w` must be null or a live workload handle.
#[no_mangle]
pub unsafe extern "C" fn esc_workload_free(w: *mut EscWorkload) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// # Safety
/// `w` must be null or a live workload handle.
#[no_mangle]
pub unsafe extern "C" fn esc_workload_index_count(w: *const EscWorkload) -> u64 {
    w.as_ref().map_or(0, |w| w.inst.index_count() as u64)
}

/// Fills `out` with the default options: two-phase greedy, interception
/// off, raw-bound early stopping with the algorithm-default scheme,
/// epsilon 0.05, budget 20000, K 20, step 100, sigma 0.5, tau 0.2,
/// theta 0.05, seed 0.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn esc_options_default(out: *mut EscOptions) -> EscStatus {
    if out.is_null() {
        return invalid("output pointer is null");
    }
    *out = EscOptions {
        algorithm: 0,
        wii: 0,
        esc: 1,
        esvs: 0,
        epsilon: 0.05,
        budget: 20_000,
        k: 20,
        step: 100,
        sigma: 0.5,
        tau: 0.2,
        theta: 0.05,
        seed: 0,
    };
    EscStatus::Ok
}

/// Runs one tuning session.
///
/// # Safety
/// `w` and `opts` must be live; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn esc_tune(
    w: *const EscWorkload,
    opts: *const EscOptions,
    out: *mut *mut EscRun,
) -> EscStatus {
    let Some(w) = w.as_ref() else {
        return invalid("workload handle is null");
    };
    let Some(opts) = opts.as_ref() else {
        return invalid("options pointer is null");
    };
    if out.is_null() {
        return invalid("output pointer is null");
    }
    let opts = match to_tune_options(opts) {
        Ok(o) => o,
        Err(status) => return status,
    };
    match tune(&w.inst, &opts) {
        Ok(result) => {
            let run = Box::new(EscRun {
                opts,
                result,
                digest: w.digest.clone(),
            });
            *out = Box::into_raw(run);
            EscStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn esc_run_free(r: *mut EscRun) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// What-if calls consumed; 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn esc_run_calls_used(r: *const EscRun) -> u64 {
    r.as_ref().map_or(0, |r| r.result.calls_used)
}

/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn esc_run_stopped_early(r: *const EscRun) -> bool {
    r.as_ref().is_some_and(|r| r.result.stopped_early)
}

/// 0 natural, 1 early stop, 2 budget exhausted; -1 for a null handle.
///
/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn esc_run_termination(r: *const EscRun) -> i32 {
    r.as_ref().map_or(-1, |r| match r.result.termination {
        Termination::Natural => 0,
        Termination::EarlyStopped => 1,
        Termination::BudgetExhausted => 2,
    })
}

/// Observed improvement of the returned configuration; NaN for a null
/// handle.
///
/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn esc_run_observed_improvement(r: *const EscRun) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.result.observed_improvement)
}

/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn esc_run_esv_invocations(r: *const EscRun) -> u64 {
    r.as_ref().map_or(0, |r| r.result.esv_invocations)
}

/// Number of indexes in the returned configuration; 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn esc_run_config_len(r: *const EscRun) -> u64 {
    r.as_ref().map_or(0, |r| r.result.final_config.len() as u64)
}

/// Identifier of the `i`-th selected index.
///
/// # Safety
/// `w` and `r` must be live handles; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn esc_run_config_member(
    w: *const EscWorkload,
    r: *const EscRun,
    i: u64,
    out: *mut *mut c_char,
) -> EscStatus {
    let Some(w) = w.as_ref() else {
        return invalid("workload handle is null");
    };
    let Some(r) = r.as_ref() else {
        return invalid("run handle is null");
    };
    if let Err(status) = same_workload(w, r) {
        return status;
    }
    let members = r.result.final_config.members();
    let Some(&z) = members.get(i as usize) else {
        return invalid(&format!(
            "index {i} out of range for a configuration of {}",
            members.len()
        ));
    };
    write_string(w.inst.index_id(z).to_string(), out)
}

/// Writes workload.json, curve.csv, calls.csv and result.json into `dir`.
///
/// # Safety
/// `w` and `r` must be live handles; `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn esc_run_save(
    w: *const EscWorkload,
    r: *const EscRun,
    dir: *const c_char,
) -> EscStatus {
    let Some(w) = w.as_ref() else {
        return invalid("workload handle is null");
    };
    let Some(r) = r.as_ref() else {
        return invalid("run handle is null");
    };
    if let Err(status) = same_workload(w, r) {
        return status;
    }
    let dir = match read_str(dir, "dir") {
        Ok(d) => d,
        Err(status) => return status,
    };
    match save_run(Path::new(dir), &w.inst.workload, &w.inst, &r.opts, &r.result) {
        Ok(()) => EscStatus::Ok,
        Err(e) => from_error(e),
    }
}

/// The run's result document as JSON.
///
/// # Safety
/// `w` and `r` must be live handles; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn esc_run_result_json(
    w: *const EscWorkload,
    r: *const EscRun,
    out: *mut *mut c_char,
) -> EscStatus {
    let Some(w) = w.as_ref() else {
        return invalid("workload handle is null");
    };
    let Some(r) = r.as_ref() else {
        return invalid("run handle is null");
    };
    if let Err(status) = same_workload(w, r) {
        return status;
    }
    let doc = ResultDoc::new(r.digest.clone(), &w.inst, &r.opts, &r.result);
    match serde_json::to_string_pretty(&doc) {
        Ok(text) => write_string(text, out),
        Err(e) => from_error(e.into()),
    }
}

/// The per-decision curve CSV.
///
/// # Safety
/// `r` must be a live run handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn esc_run_curve_csv(r: *const EscRun, out: *mut *mut c_char) -> EscStatus {
    let Some(r) = r.as_ref() else {
        return invalid("run handle is null");
    };
    write_string(curve_csv(&r.result.curve_records), out)
}

/// The what-if call log CSV.
///
/// # Safety
/// `w` and `r` must be live handles; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn esc_run_calls_csv(
    w: *const EscWorkload,
    r: *const EscRun,
    out: *mut *mut c_char,
) -> EscStatus {
    let Some(w) = w.as_ref() else {
        return invalid("workload handle is null");
    };
    let Some(r) = r.as_ref() else {
        return invalid("run handle is null");
    };
    if let Err(status) = same_workload(w, r) {
        return status;
    }
    write_string(calls_csv(&w.inst, &r.result.call_log), out)
}

/// Improvement loss, call savings and overhead of `early` against
/// `ground_truth`, as a JSON document. The ground-truth run must have the
/// same algorithm, seed, interception mode, K and budget, and must not have
/// stopped early.
///
/// # Safety
/// All handles must be live; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn esc_evaluate(
    w: *const EscWorkload,
    ground_truth: *const EscRun,
    early: *const EscRun,
    out: *mut *mut c_char,
) -> EscStatus {
    let Some(w) = w.as_ref() else {
        return invalid("workload handle is null");
    };
    let Some(gt) = ground_truth.as_ref() else {
        return invalid("ground-truth run handle is null");
    };
    let Some(early) = early.as_ref() else {
        return invalid("early run handle is null");
    };
    for r in [gt, early] {
        if let Err(status) = same_workload(w, r) {
            return status;
        }
    }
    let gt_doc = ResultDoc::new(gt.digest.clone(), &w.inst, &gt.opts, &gt.result);
    let early_doc = ResultDoc::new(early.digest.clone(), &w.inst, &early.opts, &early.result);
    let summary = evaluate(
        &w.inst,
        RunView {
            options: &gt_doc.options,
            outcome: &gt_doc.outcome,
        },
        RunView {
            options: &early_doc.options,
            outcome: &early_doc.outcome,
        },
    );
    match summary {
        Ok(s) => match serde_json::to_string_pretty(&s) {
            Ok(text) => write_string(text, out),
            Err(e) => from_error(e.into()),
        },
        Err(e) => from_error(e),
    }
}
