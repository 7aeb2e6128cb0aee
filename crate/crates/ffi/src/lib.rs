//! C interface to `fvc-core`.
//!
//! Every fallible function returns an [`FvcStatus`]. On failure the message
//! is kept per thread and can be read with [`fvc_last_error_message`].
//! Strings returned through out-parameters are owned by the caller and must
//! be released with [`fvc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fvc_core::cli::{needle_check, read_trajectory, write_trajectory, ProblemFile, ProblemSummary, SolveReport};
use fvc_core::conditions::residual_report;
use fvc_core::frac_ops::rl_integral_left;
use fvc_core::solver::{default_initial, nonexistence_diagnostic, solve, SolverConfig};
use fvc_core::{Error, Grid, GridFn, ProblemSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FvcStatus {
    Ok = 0,
    /// A pointer was null or a string was not UTF-8.
    InvalidArgument = 1,
    /// The problem or trajectory could not be parsed, is invalid or does
    /// not fit the grid.
    InvalidInput = 2,
    /// An argument is outside the domain of the operation.
    Domain = 3,
    /// The constraint map is not regular at the endpoints.
    Regularity = 4,
    Diverged = 5,
    Internal = 6,
}

/// A validated problem together with its solver settings.
pub struct FvcProblem {
    spec: ProblemSpec,
    config: SolverConfig,
}

/// Outcome of [`fvc_solve`].
pub struct FvcResult {
    report: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(FvcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Domain(_) => FvcStatus::Domain,
            Error::Regularity { .. } => FvcStatus::Regularity,
            Error::Diverged(_) => FvcStatus::Diverged,
            Error::Dimension { .. }
            | Error::GridMismatch(_)
            | Error::Expr(_)
            | Error::Validation(_)
            | Error::Input(_)
            | Error::Json(_)
            | Error::Csv(_) => FvcStatus::InvalidInput,
            _ => FvcStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: &str) -> Failure {
    Failure(FvcStatus::InvalidArgument, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FvcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FvcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            FvcStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(&format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(&format!("{name} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| invalid(&format!("{name} is null")))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(FvcStatus::Internal, "output contains a NUL byte".into()))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fvc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fvc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a problem in the JSON format read by `fvc solve`.
/// `n_cells` overrides the grid size when nonzero.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fvc_problem_from_json(
    json: *const c_char,
    n_cells: usize,
    out: *mut *mut FvcProblem,
) -> FvcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let file = ProblemFile::from_json(str_arg(json, "json")?)?;
        let spec = file.to_spec((n_cells > 0).then_some(n_cells))?;
        let problem = FvcProblem {
            spec,
            config: file.solver_config(),
        };
        *out = Box::into_raw(Box::new(problem));
        Ok(())
    })
}

/// # Safety
/// `p` must come from [`fvc_problem_from_json`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fvc_problem_free(p: *mut FvcProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of grid cells of the problem, or 0 for null.
///
/// # Safety
/// `p` must be null or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn fvc_problem_n_cells(p: *const FvcProblem) -> usize {
    p.as_ref().map_or(0, |p| p.spec.grid().n_cells())
}

/// Minimizes the problem from the zero control. `max_iters` overrides the
/// per-stage iteration cap when nonzero. Not converging is not an error;
/// query it with [`fvc_result_converged`].
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fvc_solve(
    problem: *const FvcProblem,
    max_iters: usize,
    seed: u64,
    out: *mut *mut FvcResult,
) -> FvcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let problem = problem.as_ref().ok_or_else(|| invalid("problem is null"))?;
        let spec = &problem.spec;
        let mut config = problem.config.clone();
        if max_iters > 0 {
            config.max_iters = max_iters;
        }
        let result = solve(spec, &config, &default_initial(spec)?)?;
        let report = SolveReport {
            problem: ProblemSummary::of(spec),
            nonexistence: nonexistence_diagnostic(spec, &result)?,
            needle_check: needle_check(spec, &result, config.radius, seed)?,
            result,
        };
        *out = Box::into_raw(Box::new(FvcResult { report }));
        Ok(())
    })
}

/// # Safety
/// `r` must come from [`fvc_solve`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fvc_result_free(r: *mut FvcResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Objective value of the final iterate.
///
/// # Safety
/// `r` must be a live result handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fvc_result_objective(r: *const FvcResult, out: *mut f64) -> FvcStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| invalid("result is null"))?;
        *out_arg(out, "out")? = r.report.result.objective;
        Ok(())
    })
}

/// # Safety
/// `r` must be a live result handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fvc_result_converged(r: *const FvcResult, out: *mut bool) -> FvcStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| invalid("result is null"))?;
        *out_arg(out, "out")? = r.report.result.converged;
        Ok(())
    })
}

/// The report `fvc solve` writes, as JSON.
///
/// # Safety
/// `r` must be a live result handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fvc_result_report_json(r: *const FvcResult, out: *mut *mut c_char) -> FvcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let r = r.as_ref().ok_or_else(|| invalid("result is null"))?;
        let text = serde_json::to_string_pretty(&r.report).map_err(Error::from)?;
        *out = into_c_string(text)?;
        Ok(())
    })
}

/// The optimal trajectory in the CSV format read by `fvc check`.
///
/// # Safety
/// `r` must be a live result handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fvc_result_trajectory_csv(r: *const FvcResult, out: *mut *mut c_char) -> FvcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let r = r.as_ref().ok_or_else(|| invalid("result is null"))?;
        let mut buf = Vec::new();
        write_trajectory(&r.report.result.traj, &mut buf)?;
        *out = into_c_string(String::from_utf8(buf).map_err(|e| Failure(FvcStatus::Internal, e.to_string()))?)?;
        Ok(())
    })
}

/// Residual report of a trajectory in CSV form, as JSON.
///
/// # Safety
/// `problem` must be a live handle, `csv` a NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fvc_check_json(
    problem: *const FvcProblem,
    csv: *const c_char,
    out: *mut *mut c_char,
) -> FvcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let problem = problem.as_ref().ok_or_else(|| invalid("problem is null"))?;
        let spec = &problem.spec;
        let traj = read_trajectory(str_arg(csv, "csv")?.as_bytes(), spec.grid(), spec.dim())?;
        let report = residual_report(spec, &traj, problem.config.legendre_tol)?;
        *out = into_c_string(serde_json::to_string_pretty(&report).map_err(Error::from)?)?;
        Ok(())
    })
}

/// Left Riemann-Liouville integral of order `alpha` of a scalar function
/// given by its values at the `n_cells + 1` nodes of a uniform grid on
/// `[a, b]`. Writes `n_cells + 1` node values to `out`.
///
/// # Safety
/// `values` and `out` must each point to `n_cells + 1` doubles.
#[no_mangle]
pub unsafe extern "C" fn fvc_rl_integral_left(
    values: *const f64,
    n_cells: usize,
    a: f64,
    b: f64,
    alpha: f64,
    out: *mut f64,
) -> FvcStatus {
    guard(|| {
        if values.is_null() || out.is_null() {
            return Err(invalid("values and out must not be null"));
        }
        let grid = Grid::new(a, b, n_cells)?;
        let input = std::slice::from_raw_parts(values, n_cells + 1).to_vec();
        let u = GridFn::new(grid, 1, input)?;
        let res = rl_integral_left(&u, alpha)?;
        std::slice::from_raw_parts_mut(out, n_cells + 1).copy_from_slice(res.values());
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failures_map_to_statuses() {
        assert_eq!(Failure::from(Error::Domain("x".into())).0, FvcStatus::Domain);
        assert_eq!(
            Failure::from(Error::Regularity { sigma_min: 0.0 }).0,
            FvcStatus::Regularity
        );
        assert_eq!(Failure::from(Error::Input("x".into())).0, FvcStatus::InvalidInput);
    }

    #[test]
    fn panics_become_internal_errors() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, FvcStatus::Internal);
        let msg = unsafe { CStr::from_ptr(fvc_last_error_message()) }.to_str().unwrap();
        assert!(msg.contains("boom"));
    }
}
