//! C ABI over `chebkern`.
//!
//! Every entry point returns a [`ChebkernStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read back with
//! [`chebkern_last_error`]. Trained networks are exposed as an opaque
//! [`ChebkernModel`] handle that must be released with [`chebkern_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use chebkern::git::GitBaseline;
use chebkern::lsq::{LeastSquaresSolver, TargetVector};
use chebkern::nn::{forward, load_model, MlpModel};
use chebkern::{moments, Error, GridSpec, MomentVector, Spectrum};

/// Status codes shared by all functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChebkernStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    InvalidArgument = 3,
    DimensionMismatch = 4,
    DegenerateSample = 5,
    Precondition = 6,
    Format = 7,
    Io = 8,
    Panic = 9,
}

/// Opaque handle to a trained network.
pub struct ChebkernModel {
    inner: MlpModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn status_of(err: &Error) -> ChebkernStatus {
    match err {
        Error::Domain(_) => ChebkernStatus::Domain,
        Error::InvalidArgument(_) => ChebkernStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => ChebkernStatus::DimensionMismatch,
        Error::DegenerateSample(_) => ChebkernStatus::DegenerateSample,
        Error::Precondition(_) => ChebkernStatus::Precondition,
        Error::Format(_) => ChebkernStatus::Format,
        Error::Io(_) => ChebkernStatus::Io,
        Error::Stage { source, .. } => status_of(source),
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure::Lib(err)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> ChebkernStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            ChebkernStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            ChebkernStatus::NullPointer
        }
        Ok(Err(Failure::Lib(err))) => {
            set_last_error(err.to_string());
            status_of(&err)
        }
        Err(_) => {
            set_last_error("internal panic".to_string());
            ChebkernStatus::Panic
        }
    }
}

unsafe fn input<'a>(ptr: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a>(ptr: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts_mut(ptr, len))
}

unsafe fn write<T>(ptr: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    ptr.write(value);
    Ok(())
}

unsafe fn spectrum(eigenvalues: *const f64, weights: *const f64, len: usize) -> Result<Spectrum, Failure> {
    let eigs = input(eigenvalues, len, "eigenvalues")?;
    let ws = input(weights, len, "weights")?;
    Ok(Spectrum::new(eigs.to_vec(), ws.to_vec())?)
}

/// Message of the last failed call on this thread, or NULL after a success.
///
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn chebkern_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Chebyshev polynomial `T_degree(x)`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn chebkern_cheb_eval(degree: usize, x: f64, out: *mut f64) -> ChebkernStatus {
    guard(|| write(out, chebkern::cheb_eval(degree, x)?, "out"))
}

/// Integral of `T_degree` over `[a, b]`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn chebkern_segment_integral(
    degree: usize,
    a: f64,
    b: f64,
    out: *mut f64,
) -> ChebkernStatus {
    guard(|| write(out, chebkern::segment_integral(degree, a, b)?, "out"))
}

/// First `count` Chebyshev moments of a weighted spectrum.
///
/// # Safety
/// `eigenvalues` and `weights` must hold `len` values; `out` must hold `count`.
#[no_mangle]
pub unsafe extern "C" fn chebkern_moments(
    eigenvalues: *const f64,
    weights: *const f64,
    len: usize,
    count: usize,
    out: *mut f64,
) -> ChebkernStatus {
    guard(|| {
        let spec = spectrum(eigenvalues, weights, len)?;
        let m = moments(&spec, count)?;
        output(out, count, "out")?.copy_from_slice(m.values());
        Ok(())
    })
}

/// Minimum-norm least-squares effective coefficients for a spectrum on grid `(k, l)`.
///
/// # Safety
/// `eigenvalues` and `weights` must hold `len` values; `out` must hold `moment_count`.
#[no_mangle]
pub unsafe extern "C" fn chebkern_lsq_solve(
    k: usize,
    l: usize,
    eigenvalues: *const f64,
    weights: *const f64,
    len: usize,
    moment_count: usize,
    out: *mut f64,
) -> ChebkernStatus {
    guard(|| {
        let spec = spectrum(eigenvalues, weights, len)?;
        let grid = GridSpec::new(k, l)?;
        let c = LeastSquaresSolver::for_grid(&grid, moment_count)?.solve_spectrum(&spec)?;
        output(out, moment_count, "out")?.copy_from_slice(&c);
        Ok(())
    })
}

/// Upper-bound cost of effective coefficients `c` against a spectrum on grid `(k, l)`.
///
/// # Safety
/// `eigenvalues` and `weights` must hold `len` values; `c` must hold `moment_count`.
#[no_mangle]
pub unsafe extern "C" fn chebkern_cost_upper(
    k: usize,
    l: usize,
    eigenvalues: *const f64,
    weights: *const f64,
    len: usize,
    c: *const f64,
    moment_count: usize,
    out: *mut f64,
) -> ChebkernStatus {
    guard(|| {
        let spec = spectrum(eigenvalues, weights, len)?;
        let grid = GridSpec::new(k, l)?;
        let c = input(c, moment_count, "c")?;
        let design = chebkern::lsq::build_design_matrix(&grid, moment_count)?;
        let cost = design.cost_upper(c, &TargetVector::from_spectrum(&spec, &grid))?;
        write(out, cost, "out")
    })
}

/// Upper-bound cost of the Gaussian-kernel baseline with its λ chosen for `(k, l, moment_count)`.
///
/// # Safety
/// `eigenvalues` and `weights` must hold `len` values; `out` and `lambda_out` (if non-NULL) one value each.
#[no_mangle]
pub unsafe extern "C" fn chebkern_git_cost(
    k: usize,
    l: usize,
    eigenvalues: *const f64,
    weights: *const f64,
    len: usize,
    moment_count: usize,
    out: *mut f64,
    lambda_out: *mut f64,
) -> ChebkernStatus {
    guard(|| {
        let spec = spectrum(eigenvalues, weights, len)?;
        let grid = GridSpec::new(k, l)?;
        let baseline = GitBaseline::new(&grid, moment_count)?;
        let m = moments(&spec, moment_count)?;
        let cost = chebkern::cost_upper(&baseline.spectrum_residuals(&spec, &m)?);
        write(out, cost, "out")?;
        if !lambda_out.is_null() {
            lambda_out.write(baseline.lambda());
        }
        Ok(())
    })
}

/// Loads a network saved by the `chebkern` tool.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn chebkern_model_load(path: *const c_char, out: *mut *mut ChebkernModel) -> ChebkernStatus {
    guard(|| {
        if path.is_null() {
            return Err(Failure::Null("path"));
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Error::InvalidArgument("path is not UTF-8".into()))?;
        let inner = load_model(Path::new(path))?;
        out.write(Box::into_raw(Box::new(ChebkernModel { inner })));
        Ok(())
    })
}

/// Releases a handle from [`chebkern_model_load`]. NULL is ignored.
///
/// # Safety
/// `model` must come from [`chebkern_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn chebkern_model_free(model: *mut ChebkernModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of moments the network expects.
///
/// # Safety
/// `model` must be a live handle; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn chebkern_model_moment_count(model: *const ChebkernModel, out: *mut usize) -> ChebkernStatus {
    guard(|| {
        let model = model.as_ref().ok_or(Failure::Null("model"))?;
        write(out, model.inner.input_size(), "out")
    })
}

/// Predicts the row-major `M x M` kernel matrix from `M` moments.
///
/// # Safety
/// `model` must be a live handle; `moments` must hold `moment_count` values and
/// `out` `moment_count * moment_count`.
#[no_mangle]
pub unsafe extern "C" fn chebkern_model_predict(
    model: *const ChebkernModel,
    moments: *const f64,
    moment_count: usize,
    out: *mut f64,
) -> ChebkernStatus {
    guard(|| {
        let model = model.as_ref().ok_or(Failure::Null("model"))?;
        let m = MomentVector::new(input(moments, moment_count, "moments")?.to_vec())?;
        let prediction = forward(&model.inner, &m)?;
        if prediction.len() != moment_count * moment_count {
            return Err(Error::DimensionMismatch {
                context: "model output",
                expected: moment_count * moment_count,
                found: prediction.len(),
            }
            .into());
        }
        output(out, prediction.len(), "out")?.copy_from_slice(&prediction);
        Ok(())
    })
}
