//! C ABI for `plap-radial`.
//!
//! Problems and solutions are opaque handles owned by the caller and released
//! with the matching `_free` function. Every entry point returns an
//! [`RpStatus`]; on failure a description is available from
//! [`rp_last_error_message`] on the same thread. Strings returned through out
//! parameters are released with [`rp_string_free`].
//!
//! No entry point unwinds across the boundary: panics are caught and reported
//! as [`RpStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use plap_radial::io::{self, LoadedProblem, Overrides, RunReport};
use plap_radial::verify;
use plap_radial::{criteria, solver, Error, ProfileSet, SolveReport};

/// Outcome of a call. Values 0 to 5 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RpStatus {
    Ok = 0,
    /// Internal consistency check failed.
    Internal = 1,
    /// Schema violation or invalid argument.
    InvalidInput = 2,
    /// Expression syntax error.
    Expression = 3,
    /// Iteration budget or value cap reached; the solution is still returned.
    NotConverged = 4,
    /// Evaluation domain error or non-finite value.
    Domain = 5,
    NullPointer = 10,
    InvalidUtf8 = 11,
    /// Caller buffer shorter than the data to copy.
    BufferTooSmall = 12,
    /// Component index out of range.
    OutOfRange = 13,
    Panic = 14,
}

impl RpStatus {
    fn from_error(e: &Error) -> Self {
        match e.exit_code() {
            2 => RpStatus::InvalidInput,
            3 => RpStatus::Expression,
            4 => RpStatus::NotConverged,
            5 => RpStatus::Domain,
            _ => RpStatus::Internal,
        }
    }
}

/// A loaded problem: expressions, grid and iteration settings.
pub struct RpProblem {
    loaded: LoadedProblem,
}

/// Converged (or last) profiles of a solve together with its report.
pub struct RpSolution {
    profiles: ProfileSet,
    report: SolveReport,
    json: String,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<Vec<u8>>) {
    let mut bytes = message.into();
    bytes.retain(|&b| b != 0);
    let message = CString::new(bytes).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

struct Failure(RpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(RpStatus::from_error(&e), e.to_string())
    }
}

/// Runs `body`, recording any failure or panic as the thread's last error.
fn guard(body: impl FnOnce() -> Result<RpStatus, Failure>) -> RpStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            RpStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(RpStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(RpStatus::InvalidUtf8, format!("`{name}`: {e}")))
}

unsafe fn write_string(out: *mut *mut c_char, text: String) -> Result<(), Failure> {
    let c = CString::new(text).map_err(|e| Failure(RpStatus::Internal, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or null.
///
/// The pointer stays valid until the next `rp_` call on the same thread.
#[no_mangle]
pub extern "C" fn rp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a problem document (the command-line problem-file format).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable. On success
/// `*out` owns a problem to be released with [`rp_problem_free`].
#[no_mangle]
pub unsafe extern "C" fn rp_problem_from_json(
    json: *const c_char,
    out: *mut *mut RpProblem,
) -> RpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = c_str(json, "json")?;
        let loaded = io::problem_from_json(text, &Overrides::default())?;
        *out = Box::into_raw(Box::new(RpProblem { loaded }));
        Ok(RpStatus::Ok)
    })
}

/// # Safety
/// `problem` must come from [`rp_problem_from_json`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rp_problem_free(problem: *mut RpProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of unknowns `m`, or 0 for a null handle.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_problem_components(problem: *const RpProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.loaded.spec.m())
}

/// Warnings raised while loading (sampled hypothesis violations) as a JSON array.
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_problem_warnings_json(
    problem: *const RpProblem,
    out: *mut *mut c_char,
) -> RpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let problem = borrow(problem, "problem")?;
        write_string(out, io::to_json(&problem.loaded.warnings))?;
        Ok(RpStatus::Ok)
    })
}

/// Solves the system on the problem grid.
///
/// Returns [`RpStatus::NotConverged`] with `*out` still set when the budget or
/// the value cap was reached.
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable. `*out` is released
/// with [`rp_solution_free`].
#[no_mangle]
pub unsafe extern "C" fn rp_solve(
    problem: *const RpProblem,
    out: *mut *mut RpSolution,
) -> RpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let problem = &borrow(problem, "problem")?.loaded;
        let (profiles, report) =
            solver::solve_radial_system(&problem.spec, &problem.grid, &problem.config)?;
        let residuals = verify::fixed_point_residual(&problem.spec, &problem.grid, &profiles)?;
        let mut run = RunReport::new("solve", problem);
        run.solve = Some(report.clone());
        run.residuals = Some(residuals);
        let converged = report.converged;
        *out = Box::into_raw(Box::new(RpSolution {
            profiles,
            report,
            json: io::to_json(&run),
        }));
        Ok(if converged {
            RpStatus::Ok
        } else {
            RpStatus::NotConverged
        })
    })
}

/// # Safety
/// `solution` must come from [`rp_solve`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rp_solution_free(solution: *mut RpSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Number of grid nodes, or 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_solution_len(solution: *const RpSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.profiles.grid().len())
}

/// Number of components, or 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_solution_components(solution: *const RpSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.profiles.components())
}

/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_solution_converged(solution: *const RpSolution) -> bool {
    solution.as_ref().is_some_and(|s| s.report.converged)
}

/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_solution_iterations(solution: *const RpSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.report.iterations_used)
}

unsafe fn copy_out(data: &[f64], buffer: *mut f64, capacity: usize) -> Result<RpStatus, Failure> {
    if buffer.is_null() {
        return Err(null("buffer"));
    }
    if capacity < data.len() {
        return Err(Failure(
            RpStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, {} needed", data.len()),
        ));
    }
    ptr::copy_nonoverlapping(data.as_ptr(), buffer, data.len());
    Ok(RpStatus::Ok)
}

/// Copies the grid nodes into `buffer`, which must hold [`rp_solution_len`] values.
///
/// # Safety
/// `solution` must be a live handle; `buffer` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn rp_solution_nodes(
    solution: *const RpSolution,
    buffer: *mut f64,
    capacity: usize,
) -> RpStatus {
    guard(|| {
        copy_out(
            borrow(solution, "solution")?.profiles.grid().nodes(),
            buffer,
            capacity,
        )
    })
}

/// Copies component `component` (0-based) into `buffer`.
///
/// # Safety
/// `solution` must be a live handle; `buffer` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn rp_solution_profile(
    solution: *const RpSolution,
    component: usize,
    buffer: *mut f64,
    capacity: usize,
) -> RpStatus {
    guard(|| {
        let profiles = &borrow(solution, "solution")?.profiles;
        if component >= profiles.components() {
            return Err(Failure(
                RpStatus::OutOfRange,
                format!("component {component} of {}", profiles.components()),
            ));
        }
        copy_out(profiles.profile(component), buffer, capacity)
    })
}

/// The solve report, identical to the command line's `report.json`.
///
/// # Safety
/// `solution` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_solution_report_json(
    solution: *const RpSolution,
    out: *mut *mut c_char,
) -> RpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        write_string(out, borrow(solution, "solution")?.json.clone())?;
        Ok(RpStatus::Ok)
    })
}

/// Classifies the integral conditions and writes the prediction report.
///
/// A non-positive or non-finite `epsilon` selects the problem's own.
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_predict_json(
    problem: *const RpProblem,
    epsilon: f64,
    out: *mut *mut c_char,
) -> RpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let problem = &borrow(problem, "problem")?.loaded;
        let epsilon = if epsilon > 0.0 && epsilon.is_finite() {
            epsilon
        } else {
            problem.epsilon
        };
        let grid = criteria::weight_grid_for(&problem.grid);
        let mut run = RunReport::new("predict", problem);
        run.criteria = Some(criteria::predict_on(&problem.spec, epsilon, &grid)?);
        write_string(out, io::to_json(&run))?;
        Ok(RpStatus::Ok)
    })
}

/// Solves on `[0, R], [0, 2R], ...` and writes the growth report.
///
/// A non-positive or non-finite `base_r` selects the problem's `r_max`.
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_sweep_json(
    problem: *const RpProblem,
    base_r: f64,
    doublings: u32,
    out: *mut *mut c_char,
) -> RpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let problem = &borrow(problem, "problem")?.loaded;
        let base_r = if base_r > 0.0 && base_r.is_finite() {
            base_r
        } else {
            problem.file.grid.r_max
        };
        let growth = verify::classify_growth(
            &problem.spec,
            base_r,
            problem.file.grid.points,
            doublings,
            &problem.config,
        )?;
        let mut run = RunReport::new("sweep", problem);
        run.growth = Some(growth);
        write_string(out, io::to_json(&run))?;
        Ok(RpStatus::Ok)
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
