//! C ABI over `tfbs-core`.
//!
//! Objects are opaque heap handles released with the matching `_free` function. Every
//! entry point returns a [`TfbsStatus`]; on failure the message is available from
//! [`tfbs_last_error_message`] on the same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tfbs_core::analysis::l2_error_max;
use tfbs_core::caputo::KernelMode;
use tfbs_core::mesh::{SpatialMesh, TemporalMesh};
use tfbs_core::problem::{example1, example2, Example2Variant, HomogenizedSpec};
use tfbs_core::soe::SoeApproximation;
use tfbs_core::stepper::{solve, SolutionGrid, SolverOptions};
use tfbs_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfbsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfDomain = 3,
    Tolerance = 4,
    Solver = 5,
    BufferTooSmall = 6,
    NoExactSolution = 7,
    Panic = 8,
}

/// SOE approximation of the Caputo kernel.
pub struct TfbsSoe {
    inner: SoeApproximation,
}

/// Solution on every time level together with the problem that produced it.
pub struct TfbsSolution {
    problem: HomogenizedSpec,
    grid: SolutionGrid,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TfbsStatus {
    match e {
        Error::InvalidParameter { .. }
        | Error::DimensionMismatch { .. }
        | Error::IncompatibleData { .. }
        | Error::IncompatibleGrids(_)
        | Error::Inadmissible { .. }
        | Error::StepRatio { .. }
        | Error::MissingCaputo { .. } => TfbsStatus::InvalidArgument,
        Error::OutOfDomain { .. } => TfbsStatus::OutOfDomain,
        Error::ToleranceViolation { .. } | Error::CertificationFailure { .. } => {
            TfbsStatus::Tolerance
        }
        _ => TfbsStatus::Solver,
    }
}

fn fail(status: TfbsStatus, message: impl Into<String>) -> TfbsStatus {
    set_error(message.into());
    status
}

/// Run `body`, converting errors and panics into a status.
fn guard(body: impl FnOnce() -> Result<(), (TfbsStatus, String)>) -> TfbsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => TfbsStatus::Ok,
        Ok(Err((status, message))) => fail(status, message),
        Err(_) => fail(TfbsStatus::Panic, "internal panic"),
    }
}

fn core_err(e: Error) -> (TfbsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (TfbsStatus, String) {
    (TfbsStatus::NullPointer, format!("`{name}` is null"))
}

/// Message of the last failure on this thread, or null. Valid until the next failing call
/// on the same thread.
#[no_mangle]
pub extern "C" fn tfbs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tfbs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build an SOE approximation valid on `[delta_t, horizon]` with tolerance `epsilon`.
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn tfbs_soe_build(
    alpha: f64,
    epsilon: f64,
    delta_t: f64,
    horizon: f64,
    out: *mut *mut TfbsSoe,
) -> TfbsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = SoeApproximation::build(alpha, epsilon, delta_t, horizon).map_err(core_err)?;
        *out = Box::into_raw(Box::new(TfbsSoe { inner }));
        Ok(())
    })
}

/// Number of exponentials; 0 for a null handle.
///
/// # Safety
/// `soe` must be null or a live handle from [`tfbs_soe_build`].
#[no_mangle]
pub unsafe extern "C" fn tfbs_soe_len(soe: *const TfbsSoe) -> usize {
    soe.as_ref().map_or(0, |s| s.inner.len())
}

/// Copy nodes and weights into caller buffers of capacity `capacity`.
///
/// # Safety
/// `soe` must be a live handle; `nodes` and `weights` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn tfbs_soe_nodes(
    soe: *const TfbsSoe,
    nodes: *mut f64,
    weights: *mut f64,
    capacity: usize,
) -> TfbsStatus {
    guard(|| {
        let soe = soe.as_ref().ok_or_else(|| null("soe"))?;
        if nodes.is_null() || weights.is_null() {
            return Err(null("nodes/weights"));
        }
        let len = soe.inner.len();
        if capacity < len {
            return Err((
                TfbsStatus::BufferTooSmall,
                format!("need {len} entries, got {capacity}"),
            ));
        }
        ptr::copy_nonoverlapping(soe.inner.nodes().as_ptr(), nodes, len);
        ptr::copy_nonoverlapping(soe.inner.weights().as_ptr(), weights, len);
        Ok(())
    })
}

/// Evaluate the exponential sum at `t` (must lie in the certified range).
///
/// # Safety
/// `soe` must be a live handle; `value` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn tfbs_soe_eval(soe: *const TfbsSoe, t: f64, value: *mut f64) -> TfbsStatus {
    guard(|| {
        let soe = soe.as_ref().ok_or_else(|| null("soe"))?;
        if value.is_null() {
            return Err(null("value"));
        }
        *value = soe.inner.eval(t).map_err(core_err)?;
        Ok(())
    })
}

/// Largest sampled deviation from the exact kernel over `samples` geometric points.
///
/// # Safety
/// `soe` must be a live handle; `value` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn tfbs_soe_max_error(
    soe: *const TfbsSoe,
    samples: usize,
    value: *mut f64,
) -> TfbsStatus {
    guard(|| {
        let soe = soe.as_ref().ok_or_else(|| null("soe"))?;
        if value.is_null() {
            return Err(null("value"));
        }
        *value = soe.inner.max_error(samples);
        Ok(())
    })
}

/// Release a handle from [`tfbs_soe_build`]; null is ignored.
///
/// # Safety
/// `soe` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tfbs_soe_free(soe: *mut TfbsSoe) {
    if !soe.is_null() {
        drop(Box::from_raw(soe));
    }
}

/// Solve a built-in problem on a graded mesh `t_k = (k/n)^gamma`.
///
/// `example` is 1 or 2; `variant` selects the coefficient set of example 2
/// (0 printed, 1 transformed). `gamma <= 0` means `2/alpha`. `mode` is 0 for the
/// fast history, 1 for direct summation.
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn tfbs_solve_example(
    example: u32,
    variant: u32,
    alpha: f64,
    n: usize,
    m: usize,
    gamma: f64,
    mode: u32,
    epsilon: f64,
    out: *mut *mut TfbsSolution,
) -> TfbsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let invalid = |msg: String| (TfbsStatus::InvalidArgument, msg);
        let problem = match (example, variant) {
            (1, _) => example1(alpha),
            (2, 0) => example2(alpha, Example2Variant::Printed),
            (2, 1) => example2(alpha, Example2Variant::Transformed),
            (2, v) => return Err(invalid(format!("variant must be 0 or 1, got {v}"))),
            (e, _) => return Err(invalid(format!("example must be 1 or 2, got {e}"))),
        }
        .map_err(core_err)?;
        let mode = match mode {
            0 => KernelMode::Fast,
            1 => KernelMode::Direct,
            other => return Err(invalid(format!("mode must be 0 or 1, got {other}"))),
        };
        let gamma = if gamma > 0.0 { gamma } else { 2.0 / alpha };
        let tmesh = TemporalMesh::graded(problem.horizon, n, gamma, alpha).map_err(core_err)?;
        let smesh = SpatialMesh::new(problem.x_left, problem.x_right, m).map_err(core_err)?;
        let options = SolverOptions {
            mode,
            epsilon,
            allow_m1_violation: false,
        };
        let grid = solve(&problem, &tmesh, &smesh, &options).map_err(core_err)?;
        *out = Box::into_raw(Box::new(TfbsSolution { problem, grid }));
        Ok(())
    })
}

/// Number of time levels `N + 1`; 0 for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tfbs_solution_levels(sol: *const TfbsSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.grid.n_levels())
}

/// Interior nodes per level `M - 1`; 0 for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tfbs_solution_interior_len(sol: *const TfbsSolution) -> usize {
    sol.as_ref()
        .map_or(0, |s| s.grid.spatial_mesh().interior_len())
}

/// Time `t_level`.
///
/// # Safety
/// `sol` must be a live handle; `t` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn tfbs_solution_time(
    sol: *const TfbsSolution,
    level: usize,
    t: *mut f64,
) -> TfbsStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        if t.is_null() {
            return Err(null("t"));
        }
        if level >= sol.grid.n_levels() {
            return Err((
                TfbsStatus::InvalidArgument,
                format!("level {level} out of range 0..{}", sol.grid.n_levels()),
            ));
        }
        *t = sol.grid.temporal_mesh().t(level);
        Ok(())
    })
}

/// Copy the interior values of one level into `buffer` of capacity `capacity`.
///
/// # Safety
/// `sol` must be a live handle; `buffer` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn tfbs_solution_copy_level(
    sol: *const TfbsSolution,
    level: usize,
    buffer: *mut f64,
    capacity: usize,
) -> TfbsStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        if level >= sol.grid.n_levels() {
            return Err((
                TfbsStatus::InvalidArgument,
                format!("level {level} out of range 0..{}", sol.grid.n_levels()),
            ));
        }
        let values = sol.grid.level(level);
        if capacity < values.len() {
            return Err((
                TfbsStatus::BufferTooSmall,
                format!("need {} entries, got {capacity}", values.len()),
            ));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buffer, values.len());
        Ok(())
    })
}

/// Maximum over levels of the discrete L2 error; only for problems with a known solution.
///
/// # Safety
/// `sol` must be a live handle; `value` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn tfbs_solution_l2_error_max(
    sol: *const TfbsSolution,
    value: *mut f64,
) -> TfbsStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        if value.is_null() {
            return Err(null("value"));
        }
        let exact = sol.problem.exact.as_ref().ok_or_else(|| {
            (
                TfbsStatus::NoExactSolution,
                "problem has no exact solution".to_string(),
            )
        })?;
        *value = l2_error_max(&sol.grid, exact);
        Ok(())
    })
}

/// Release a handle from [`tfbs_solve_example`]; null is ignored.
///
/// # Safety
/// `sol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tfbs_solution_free(sol: *mut TfbsSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}
