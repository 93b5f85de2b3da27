//! C ABI over the orliczvar core.
//!
//! Every entry point returns an [`OvStatus`]; results travel through out
//! pointers. On failure the message is available from
//! [`ov_last_error_message`] on the same thread. Handles are opaque and must
//! be released with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use orliczvar::orlicz::luxemburg_norm;
use orliczvar::{conjugate, ConjugateFunction, ConvexFunction, Error, NFunction, NFunctionSpec, ProblemSpec};
use orliczvar::{SolveReport, Trajectory};

/// Status codes shared by every function of the interface.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    DimensionMismatch = 4,
    Numerical = 5,
    HypothesesRejected = 6,
    Panic = 7,
}

/// An N-function together with its conjugate.
pub struct OvNFunction {
    phi: NFunction,
    star: ConjugateFunction,
}

/// A sampled periodic trajectory.
pub struct OvTrajectory {
    inner: Trajectory,
}

/// The outcome of a solve.
pub struct OvSolveReport {
    inner: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(OvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. } => OvStatus::DimensionMismatch,
            Error::InvalidParameter(_) | Error::Json(_) | Error::Csv(_) | Error::Io(_) => OvStatus::InvalidArgument,
            Error::HypothesesRejected { .. } => OvStatus::HypothesesRejected,
            _ => OvStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(OvStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> OvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            OvStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("panic: {msg}"));
            OvStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Failure(OvStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn read_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn check_len(expected: usize, found: usize) -> Result<(), Failure> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found }.into());
    }
    Ok(())
}

fn json_string(value: &SolveReport) -> Result<CString, Failure> {
    let text = serde_json::to_string(value).map_err(Error::from)?;
    CString::new(text).map_err(|e| Failure(OvStatus::InvalidArgument, e.to_string()))
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ov_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ov_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds an N-function from its JSON description.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ov_nfunction_from_json(json: *const c_char, out: *mut *mut OvNFunction) -> OvStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let spec: NFunctionSpec = serde_json::from_str(text).map_err(Error::from)?;
        let phi = spec.build()?;
        let star = conjugate(&phi);
        write_out(out, Box::into_raw(Box::new(OvNFunction { phi, star })), "out")
    })
}

/// # Safety
/// `h` must come from [`ov_nfunction_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ov_nfunction_free(h: *mut OvNFunction) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ov_nfunction_dim(h: *const OvNFunction, out: *mut usize) -> OvStatus {
    guard(|| write_out(out, handle(h, "nfunction")?.phi.dim(), "out"))
}

/// `Phi(y)` for `y` of length `dim`.
///
/// # Safety
/// `y` must point to `len` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn ov_nfunction_eval(
    h: *const OvNFunction,
    y: *const f64,
    len: usize,
    out: *mut f64,
) -> OvStatus {
    guard(|| {
        let f = handle(h, "nfunction")?;
        check_len(f.phi.dim(), len)?;
        write_out(out, f.phi.value(read_slice(y, len, "y")?), "out")
    })
}

/// `grad Phi(y)` written to `out[0..len]`.
///
/// # Safety
/// `y` and `out` must each point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ov_nfunction_gradient(
    h: *const OvNFunction,
    y: *const f64,
    len: usize,
    out: *mut f64,
) -> OvStatus {
    guard(|| {
        let f = handle(h, "nfunction")?;
        check_len(f.phi.dim(), len)?;
        let g = f.phi.gradient(read_slice(y, len, "y")?);
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(g.as_ptr(), out, len);
        Ok(())
    })
}

/// `Phi*(zeta)`; may be `+inf` outside the effective domain.
///
/// # Safety
/// `zeta` must point to `len` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn ov_conjugate_eval(
    h: *const OvNFunction,
    zeta: *const f64,
    len: usize,
    out: *mut f64,
) -> OvStatus {
    guard(|| {
        let f = handle(h, "nfunction")?;
        check_len(f.phi.dim(), len)?;
        write_out(out, f.star.value(read_slice(zeta, len, "zeta")?), "out")
    })
}

/// Trajectory on `n` uniform nodes of `[0, period)`; `values` holds `n * dim`
/// doubles, node-major.
///
/// # Safety
/// `values` must point to `n * dim` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn ov_trajectory_new(
    period: f64,
    n: usize,
    dim: usize,
    values: *const f64,
    out: *mut *mut OvTrajectory,
) -> OvStatus {
    guard(|| {
        let len = n.checked_mul(dim).ok_or_else(|| Failure(OvStatus::InvalidArgument, "n * dim overflows".into()))?;
        if dim == 0 {
            return Err(Failure(OvStatus::InvalidArgument, "dim must be positive".into()));
        }
        let v = read_slice(values, len, "values")?.to_vec();
        let inner = Trajectory::new(period, dim, v)?;
        write_out(out, Box::into_raw(Box::new(OvTrajectory { inner })), "out")
    })
}

/// # Safety
/// `h` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ov_trajectory_free(h: *mut OvTrajectory) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of nodes and components.
///
/// # Safety
/// `h` must be live; `n` and `dim` writable.
#[no_mangle]
pub unsafe extern "C" fn ov_trajectory_shape(h: *const OvTrajectory, n: *mut usize, dim: *mut usize) -> OvStatus {
    guard(|| {
        let t = &handle(h, "trajectory")?.inner;
        write_out(n, t.len(), "n")?;
        write_out(dim, t.dim(), "dim")
    })
}

/// Copies the node values into `out`, which must hold `n * dim` doubles.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ov_trajectory_values(h: *const OvTrajectory, out: *mut f64, len: usize) -> OvStatus {
    guard(|| {
        let v = handle(h, "trajectory")?.inner.values();
        check_len(v.len(), len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), out, len);
        Ok(())
    })
}

/// Luxemburg norm of `u` with respect to `Phi`.
///
/// # Safety
/// Both handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ov_luxemburg_norm(
    phi: *const OvNFunction,
    u: *const OvTrajectory,
    out: *mut f64,
) -> OvStatus {
    guard(|| {
        let f = handle(phi, "nfunction")?;
        let t = handle(u, "trajectory")?;
        write_out(out, luxemburg_norm(&f.phi, &t.inner)?, "out")
    })
}

/// Solves the problem described by a JSON problem specification. An
/// uncertified result is still `OV_STATUS_OK`; query
/// [`ov_report_certified`].
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ov_solve_json(json: *const c_char, out: *mut *mut OvSolveReport) -> OvStatus {
    guard(|| {
        let spec = ProblemSpec::from_json(read_str(json, "json")?)?;
        let inner = orliczvar::solver::minimize(&spec)?;
        write_out(out, Box::into_raw(Box::new(OvSolveReport { inner })), "out")
    })
}

/// # Safety
/// `h` must come from [`ov_solve_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ov_report_free(h: *mut OvSolveReport) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ov_report_certified(h: *const OvSolveReport, out: *mut bool) -> OvStatus {
    guard(|| write_out(out, handle(h, "report")?.inner.certified, "out"))
}

/// Discrete action of the minimizer.
///
/// # Safety
/// `h` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ov_report_action(h: *const OvSolveReport, out: *mut f64) -> OvStatus {
    guard(|| write_out(out, handle(h, "report")?.inner.action, "out"))
}

/// Largest Euler-Lagrange node residual of the minimizer.
///
/// # Safety
/// `h` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ov_report_el_residual(h: *const OvSolveReport, out: *mut f64) -> OvStatus {
    guard(|| write_out(out, handle(h, "report")?.inner.el_residual, "out"))
}

/// Copies the minimizer into a new trajectory handle.
///
/// # Safety
/// `h` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ov_report_minimizer(h: *const OvSolveReport, out: *mut *mut OvTrajectory) -> OvStatus {
    guard(|| {
        let inner = handle(h, "report")?.inner.minimizer.clone();
        write_out(out, Box::into_raw(Box::new(OvTrajectory { inner })), "out")
    })
}

/// The full report as JSON; release with [`ov_string_free`].
///
/// # Safety
/// `h` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ov_report_to_json(h: *const OvSolveReport, out: *mut *mut c_char) -> OvStatus {
    guard(|| {
        let s = json_string(&handle(h, "report")?.inner)?;
        write_out(out, s.into_raw(), "out")
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ov_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
