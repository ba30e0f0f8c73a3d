//! C ABI over the solver library.
//!
//! Objects cross the boundary as opaque handles created by `isg_*_new`,
//! `isg_*_from_json` or `isg_solve` and released by the matching `isg_*_free`.
//! Every fallible call returns an [`IsgStatus`]; on failure the message is
//! available from [`isg_last_error_message`] on the same thread. Strings
//! returned to the caller are owned by the caller and released with
//! [`isg_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::{c_char, size_t};

use inexact_subgradient::analysis::verify_run;
use inexact_subgradient::artifacts::VerifyReport;
use inexact_subgradient::config::RunConfig;
use inexact_subgradient::error::Error;
use inexact_subgradient::problems::{generate_instance, EllipsoidL1Spec, ProblemInstance};
use inexact_subgradient::projection::{fw_project, FwOptions, ToleranceParams};
use inexact_subgradient::sets::FeasibleSet;
use inexact_subgradient::solver::{solve_instance, SolverRun, Status};
use inexact_subgradient::stepsize::RuleConstants;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IsgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    InvalidJson = 3,
    /// Projection or barrier failure, including a run that stopped on one.
    ProjectionFailed = 4,
    SolverError = 5,
    Panic = 6,
}

/// Opaque feasible set.
pub struct IsgSet(FeasibleSet);

/// Opaque problem instance.
pub struct IsgInstance(ProblemInstance);

/// Opaque finished run.
pub struct IsgRun {
    config: RunConfig,
    run: SolverRun,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(IsgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Json(_) => IsgStatus::InvalidJson,
            Error::ProjectionBudget { .. }
            | Error::BarrierNotConverged { .. }
            | Error::Infeasible { .. } => IsgStatus::ProjectionFailed,
            Error::DimensionMismatch { .. }
            | Error::NonFinite(_)
            | Error::InvalidSet(_)
            | Error::InvalidParams(_)
            | Error::InvalidConfig(_)
            | Error::RuleViolation(_)
            | Error::NoClosedFormProjection(_) => IsgStatus::InvalidArgument,
            _ => IsgStatus::SolverError,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(IsgStatus::NullArgument, format!("{what} is null"))
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> IsgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            IsgStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside the solver library");
            IsgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(IsgStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: size_t, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    let c = CString::new(s).map_err(|_| Failure(IsgStatus::SolverError, "interior NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn write_vec(out: *mut f64, len: size_t, v: &[f64]) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len != v.len() {
        return Err(Failure(
            IsgStatus::InvalidArgument,
            format!("output buffer has length {len}, expected {}", v.len()),
        ));
    }
    std::slice::from_raw_parts_mut(out, len).copy_from_slice(v);
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or NULL. Free with
/// [`isg_string_free`].
#[no_mangle]
pub extern "C" fn isg_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().clone().map_or(ptr::null_mut(), CString::into_raw))
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn isg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isg_set_from_json(json: *const c_char, out: *mut *mut IsgSet) -> IsgStatus {
    guard(|| {
        let set = FeasibleSet::from_json(str_arg(json, "json")?)?;
        write_out(out, IsgSet(set))
    })
}

/// Closed ball with the given center and radius.
///
/// # Safety
/// `center` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isg_set_new_ball(
    center: *const f64,
    n: size_t,
    radius: f64,
    out: *mut *mut IsgSet,
) -> IsgStatus {
    guard(|| {
        let c = slice_arg(center, n, "center")?;
        write_out(out, IsgSet(FeasibleSet::new_ball(c.to_vec(), radius)?))
    })
}

/// # Safety
/// `lower` and `upper` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isg_set_new_box(
    lower: *const f64,
    upper: *const f64,
    n: size_t,
    out: *mut *mut IsgSet,
) -> IsgStatus {
    guard(|| {
        let lo = slice_arg(lower, n, "lower")?;
        let hi = slice_arg(upper, n, "upper")?;
        write_out(out, IsgSet(FeasibleSet::new_box(lo.to_vec(), hi.to_vec())?))
    })
}

/// # Safety
/// `set` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn isg_set_free(set: *mut IsgSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Dimension of the set, 0 for NULL.
///
/// # Safety
/// `set` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn isg_set_dimension(set: *const IsgSet) -> size_t {
    set.as_ref().map_or(0, |s| s.0.dimension())
}

/// Writes `argmin_{z ∈ C} ⟨c, z⟩` to `out`.
///
/// # Safety
/// `c` and `out` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn isg_set_lmo(
    set: *const IsgSet,
    c: *const f64,
    out: *mut f64,
    n: size_t,
) -> IsgStatus {
    guard(|| {
        let set = handle(set, "set")?;
        let z = set.0.lmo(slice_arg(c, n, "c")?)?;
        write_vec(out, n, &z)
    })
}

/// Frank-Wolfe feasible inexact projection of `v` started at `u ∈ C`.
/// `max_inner = 0` selects the default budget. The inner iteration count is
/// written to `iterations` when it is not NULL.
///
/// # Safety
/// `u`, `v` and `out` must point to `n` doubles.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn isg_fw_project(
    set: *const IsgSet,
    gamma: f64,
    theta: f64,
    lambda: f64,
    u: *const f64,
    v: *const f64,
    n: size_t,
    max_inner: size_t,
    out: *mut f64,
    iterations: *mut size_t,
) -> IsgStatus {
    guard(|| {
        let set = handle(set, "set")?;
        let params = ToleranceParams::new(gamma, theta, lambda)?;
        let mut opts = FwOptions::for_dimension(n);
        if max_inner > 0 {
            opts = opts.with_max_inner(max_inner);
        }
        let res = fw_project(&set.0, &params, slice_arg(u, n, "u")?, slice_arg(v, n, "v")?, &opts)?;
        write_vec(out, n, &res.point)?;
        if !iterations.is_null() {
            *iterations = res.inner_iterations;
        }
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isg_instance_from_json(
    json: *const c_char,
    out: *mut *mut IsgInstance,
) -> IsgStatus {
    guard(|| {
        let inst = ProblemInstance::from_json(str_arg(json, "json")?)?;
        write_out(out, IsgInstance(inst))
    })
}

/// Draws a sparse-recovery instance of dimension `n ≥ 2`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isg_instance_generate(n: size_t, seed: u64, out: *mut *mut IsgInstance) -> IsgStatus {
    guard(|| {
        let inst = generate_instance(&EllipsoidL1Spec::new(n, seed))?;
        write_out(out, IsgInstance(inst))
    })
}

/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isg_instance_to_json(inst: *const IsgInstance, out: *mut *mut c_char) -> IsgStatus {
    guard(|| {
        let inst = handle(inst, "instance")?;
        write_string(out, inst.0.to_json()?)
    })
}

/// # Safety
/// `inst` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn isg_instance_dimension(inst: *const IsgInstance) -> size_t {
    inst.as_ref().map_or(0, |i| i.0.set.dimension())
}

/// # Safety
/// `inst` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn isg_instance_free(inst: *mut IsgInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Solves `inst` with the rule and options of a run configuration JSON
/// (its problem field is ignored). NULL selects the default configuration.
/// A run that stops on a projection failure is still returned, together
/// with `ProjectionFailed`.
///
/// # Safety
/// `inst` must be a live handle; `config_json` NULL or NUL-terminated;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn isg_solve(
    inst: *const IsgInstance,
    config_json: *const c_char,
    out: *mut *mut IsgRun,
) -> IsgStatus {
    let mut failed = false;
    let status = guard(|| {
        let inst = handle(inst, "instance")?;
        let config = if config_json.is_null() {
            RunConfig::default()
        } else {
            RunConfig::from_json(str_arg(config_json, "config")?)?
        };
        let run = solve_instance(&inst.0, &config.rule, &config.solver)?;
        if run.report.status == Status::ProjectionFailed {
            failed = true;
            set_last_error(run.report.message.as_deref().unwrap_or("projection failed"));
        }
        write_out(out, IsgRun { config, run })
    });
    if status == IsgStatus::Ok && failed {
        // guard cleared the message on success
        set_last_error("run stopped on a projection failure");
        IsgStatus::ProjectionFailed
    } else {
        status
    }
}

/// # Safety
/// `run` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isg_run_report_json(run: *const IsgRun, out: *mut *mut c_char) -> IsgStatus {
    guard(|| write_string(out, handle(run, "run")?.run.report.to_json()?))
}

/// Per-iteration records as CSV with a header line.
///
/// # Safety
/// `run` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isg_run_trace_csv(run: *const IsgRun, out: *mut *mut c_char) -> IsgStatus {
    guard(|| write_string(out, handle(run, "run")?.run.trace.to_csv()))
}

/// Best objective value found, NaN for NULL.
///
/// # Safety
/// `run` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn isg_run_f_rec(run: *const IsgRun) -> f64 {
    run.as_ref().map_or(f64::NAN, |r| r.run.report.f_rec)
}

/// Outer iterations performed.
///
/// # Safety
/// `run` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn isg_run_iterations(run: *const IsgRun) -> size_t {
    run.as_ref().map_or(0, |r| r.run.report.k)
}

/// Copies the best point found into `out`.
///
/// # Safety
/// `out` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn isg_run_x_rec(run: *const IsgRun, out: *mut f64, n: size_t) -> IsgStatus {
    guard(|| write_vec(out, n, &handle(run, "run")?.run.report.x_rec))
}

/// Runs every applicable trace check and writes the aggregated report as
/// JSON. `passed` receives 1 when no blocking check failed.
///
/// # Safety
/// `inst` and `run` must be live handles; `out` writable; `passed` NULL or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn isg_run_verify_json(
    inst: *const IsgInstance,
    run: *const IsgRun,
    out: *mut *mut c_char,
    passed: *mut i32,
) -> IsgStatus {
    guard(|| {
        let inst = handle(inst, "instance")?;
        let r = handle(run, "run")?;
        let cfg = &r.config;
        let constants = RuleConstants::new(&cfg.solver.params, cfg.rule.mu());
        let checks = verify_run(
            &inst.0,
            &cfg.rule,
            &constants,
            &r.run.trace,
            Some(&r.run.report),
            cfg.probes,
            cfg.seed,
        )?;
        let report = VerifyReport::new(checks);
        if !passed.is_null() {
            *passed = i32::from(report.passed);
        }
        write_string(out, serde_json::to_string(&report).map_err(Error::from)?)
    })
}

/// # Safety
/// `run` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn isg_run_free(run: *mut IsgRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
