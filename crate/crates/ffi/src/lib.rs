//! C ABI over `wop-core`.
//!
//! Every entry point returns a [`WopStatus`]. On failure the message is
//! available from [`wop_last_error`] on the same thread. Strings handed out
//! by this library are owned by the caller and must be released with
//! [`wop_string_free`]; instances with [`wop_instance_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wop_core::baseline::{run_poc, PocConfig};
use wop_core::bench::{generate_instance, InstanceSpec};
use wop_core::model::{
    check_solution_doc, objective_o1, objective_o2, validate_instance, Instance, SolutionDoc, WopSolution,
};
use wop_core::postprocess::{run_qi4wop, Qi4wopConfig};
use wop_core::solvers::{AnnealingBackend, Backend, ExactBackend, RemoteBackend};
use wop_core::Error;

pub const WOP_BACKEND_EXACT: u32 = 0;
pub const WOP_BACKEND_ANNEAL: u32 = 1;
pub const WOP_BACKEND_REMOTE: u32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WopStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidInstance = 4,
    MalformedSolution = 5,
    Infeasible = 6,
    OracleLimit = 7,
    InvalidConfig = 8,
    NoInitialSolution = 9,
    GeneratorInfeasible = 10,
    Remote = 11,
    Io = 12,
    Model = 13,
    Panic = 99,
}

/// Opaque instance handle.
pub struct WopInstance {
    inner: Instance,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let msg = CString::new(message.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(WopStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse { .. } => WopStatus::Parse,
            Error::InvalidInstance(_) | Error::StructurallyInfeasible { .. } => WopStatus::InvalidInstance,
            Error::MalformedSolution(_) => WopStatus::MalformedSolution,
            Error::Infeasible(_) => WopStatus::Infeasible,
            Error::OracleLimit(_) => WopStatus::OracleLimit,
            Error::InvalidConfig(_) | Error::InvalidWeights => WopStatus::InvalidConfig,
            Error::NoInitialSolution => WopStatus::NoInitialSolution,
            Error::GeneratorInfeasible(_) => WopStatus::GeneratorInfeasible,
            Error::Remote(_) => WopStatus::Remote,
            Error::Io(_) => WopStatus::Io,
            _ => WopStatus::Model,
        };
        Failure(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(WopStatus::Parse, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WopStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            WopStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            WopStatus::Panic
        }
    }
}

fn null() -> Failure {
    Failure(WopStatus::NullArgument, "null pointer argument".into())
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Failure(WopStatus::InvalidUtf8, e.to_string()))
}

unsafe fn read_opt_str<'a>(s: *const c_char) -> Result<Option<&'a str>, Failure> {
    if s.is_null() {
        Ok(None)
    } else {
        read_str(s).map(Some)
    }
}

unsafe fn instance<'a>(h: *const WopInstance) -> Result<&'a Instance, Failure> {
    h.as_ref().map(|h| &h.inner).ok_or_else(null)
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|e| Failure(WopStatus::Model, e.to_string()))?;
    put(out, c.into_raw())
}

fn backend(kind: u32, job: &str) -> Result<Box<dyn Backend>, Failure> {
    Ok(match kind {
        WOP_BACKEND_EXACT => Box::new(ExactBackend::default()),
        WOP_BACKEND_ANNEAL => Box::new(AnnealingBackend),
        WOP_BACKEND_REMOTE => Box::new(RemoteBackend::from_env(job)?),
        other => return Err(Failure(WopStatus::InvalidConfig, format!("unknown backend {other}"))),
    })
}

fn solution(doc: &str, inst: &Instance) -> Result<WopSolution, Failure> {
    let doc: SolutionDoc = serde_json::from_str(doc)?;
    match WopSolution::from_doc(&doc, inst)? {
        Ok(s) => Ok(s),
        Err(missing) => Err(Failure(
            WopStatus::MalformedSolution,
            format!("items without placement: {}", missing.join(", ")),
        )),
    }
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn wop_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wop_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wop_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses an instance document. Does not validate it.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wop_instance_from_json(json: *const c_char, out: *mut *mut WopInstance) -> WopStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let inner = Instance::from_json(read_str(json)?)?;
        put(out, Box::into_raw(Box::new(WopInstance { inner })))
    })
}

/// # Safety
/// `h` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wop_instance_free(h: *mut WopInstance) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wop_instance_to_json(h: *const WopInstance, out: *mut *mut c_char) -> WopStatus {
    guard(|| put_string(out, instance(h)?.to_json()))
}

/// Item count, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wop_instance_num_items(h: *const WopInstance) -> usize {
    h.as_ref().map_or(0, |h| h.inner.num_items())
}

/// Location count, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wop_instance_num_locations(h: *const WopInstance) -> usize {
    h.as_ref().map_or(0, |h| h.inner.num_locations())
}

/// Writes the validation report as JSON; `feasible` receives its verdict.
///
/// # Safety
/// `h` must be a live handle; both out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn wop_instance_validate(
    h: *const WopInstance,
    feasible: *mut bool,
    report_json: *mut *mut c_char,
) -> WopStatus {
    guard(|| {
        let report = validate_instance(instance(h)?);
        put(feasible, report.feasible)?;
        put_string(report_json, serde_json::to_string(&report)?)
    })
}

/// Generates an instance from a spec document (missing fields take
/// defaults). The feasibility witness is written as a solution document.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string; out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn wop_generate_instance(
    spec_json: *const c_char,
    out: *mut *mut WopInstance,
    witness_json: *mut *mut c_char,
) -> WopStatus {
    guard(|| {
        let spec: InstanceSpec = serde_json::from_str(read_str(spec_json)?)?;
        let generated = generate_instance(&spec)?;
        let witness = serde_json::to_string(&generated.witness.to_doc(&generated.instance))?;
        if out.is_null() || witness_json.is_null() {
            return Err(null());
        }
        put_string(witness_json, witness)?;
        put(
            out,
            Box::into_raw(Box::new(WopInstance {
                inner: generated.instance,
            })),
        )
    })
}

/// Checks a solution document against the instance.
///
/// # Safety
/// `h` must be a live handle; `solution_json` NUL-terminated; out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn wop_check_solution(
    h: *const WopInstance,
    solution_json: *const c_char,
    feasible: *mut bool,
    report_json: *mut *mut c_char,
) -> WopStatus {
    guard(|| {
        let inst = instance(h)?;
        let doc: SolutionDoc = serde_json::from_str(read_str(solution_json)?)?;
        let report = check_solution_doc(&doc, inst)?;
        put(feasible, report.feasible)?;
        put_string(report_json, serde_json::to_string(&report)?)
    })
}

/// Storage time and ground area of a feasible solution.
///
/// # Safety
/// `h` must be a live handle; `solution_json` NUL-terminated; out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn wop_objectives(
    h: *const WopInstance,
    solution_json: *const c_char,
    o1: *mut i64,
    o2: *mut i64,
) -> WopStatus {
    guard(|| {
        let inst = instance(h)?;
        let sol = solution(read_str(solution_json)?, inst)?;
        let (a, b) = (objective_o1(&sol, inst)?, objective_o2(&sol, inst)?);
        put(o1, a)?;
        put(o2, b)
    })
}

/// Runs the sampling pipeline and writes the population document.
/// `config_json` may be null for defaults.
///
/// # Safety
/// `h` must be a live handle; `config_json` null or NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wop_run_qi4wop(
    h: *const WopInstance,
    backend_kind: u32,
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> WopStatus {
    guard(|| {
        let inst = instance(h)?;
        let config: Qi4wopConfig = match read_opt_str(config_json)? {
            Some(s) => serde_json::from_str(s)?,
            None => Qi4wopConfig::default(),
        };
        let backend = backend(backend_kind, inst.name())?;
        let run = run_qi4wop(inst, &config, backend.as_ref())?;
        put_string(out, run.population.to_json(inst))
    })
}

/// Runs initialization plus local search and writes the result document.
/// `config_json` may be null for defaults.
///
/// # Safety
/// `h` must be a live handle; `config_json` null or NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wop_run_poc(
    h: *const WopInstance,
    backend_kind: u32,
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> WopStatus {
    guard(|| {
        let inst = instance(h)?;
        let config: PocConfig = match read_opt_str(config_json)? {
            Some(s) => serde_json::from_str(s)?,
            None => PocConfig::default(),
        };
        let backend = backend(backend_kind, inst.name())?;
        let result = run_poc(inst, &config, backend.as_ref())?;
        put_string(out, result.to_json(inst))
    })
}
