//! C interface to `roughreg`.
//!
//! Paths, enhanced paths and controlled pairs cross the boundary as opaque
//! handles created by `rr_*_new`-style constructors and released with the
//! matching `rr_*_free`. Every fallible call returns an [`RrStatus`]; on
//! failure [`rr_last_error`] holds a message for the calling thread.
//!
//! Matrices are row-major. Output buffers are caller-owned and their length
//! (in doubles) is passed alongside; a short buffer is an error.

use std::cell::RefCell;
use std::ffi::{c_char, c_void};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use roughreg::controlled::orthogonality_stat;
use roughreg::enhance::chen_residual;
use roughreg::regcalc::{c_eps, scalar_qv};
use roughreg::roughint::{rough_integral_backward, rough_integral_reg, sewing_integral};
use roughreg::{
    enhance, gen_bm, gen_fbm, pair_gradient, ControlledPair, EnhancedPath, Error, Flavor, Grid, GridPath, MatrixPath,
    PairLabel, SecondOrder, Seed,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    GridMismatch = 3,
    NonFinite = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Second-order enhancement flavor.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrFlavor {
    Ito = 0,
    Strat = 1,
}

/// A sampled path on a uniform grid.
pub struct RrPath(GridPath);

/// A path together with its second-order process.
pub struct RrEnhanced(EnhancedPath);

/// A controlled pair `(Y, Y')` over a reference path.
pub struct RrPair(ControlledPair);

/// `f(x)` for `x` of length `dim`.
pub type RrScalarFn = Option<unsafe extern "C" fn(x: *const f64, dim: usize, user: *mut c_void) -> f64>;
/// Writes the gradient of `f` at `x` into `out` (length `dim`).
pub type RrGradFn = Option<unsafe extern "C" fn(x: *const f64, dim: usize, out: *mut f64, user: *mut c_void)>;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Fail(RrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::GridMismatch(_) => RrStatus::GridMismatch,
            Error::NonFinite(_) => RrStatus::NonFinite,
            Error::Factorization { .. } => RrStatus::Numerical,
            _ => RrStatus::InvalidArgument,
        };
        Fail(code, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RrStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err(Fail(RrStatus::Panic, "panic inside roughreg".into())));
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|e| e.borrow_mut().clear());
            RrStatus::Ok
        }
        Err(Fail(code, msg)) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = msg);
            code
        }
    }
}

unsafe fn href<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(RrStatus::NullPointer, "null handle".into()))
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(Fail(RrStatus::NullPointer, "null input array".into()));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out(out: *mut f64, len: usize, data: &[f64]) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(RrStatus::NullPointer, "null output buffer".into()));
    }
    if len < data.len() {
        return Err(Fail(
            RrStatus::BufferTooSmall,
            format!("output buffer holds {len} values, {} needed", data.len()),
        ));
    }
    ptr::copy_nonoverlapping(data.as_ptr(), out, data.len());
    Ok(())
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(RrStatus::NullPointer, "null output handle".into()));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies the calling thread's last error message, NUL-terminated, into
/// `buf` and returns the buffer size the full message needs.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rr_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Path from `(steps + 1) * dim` row-major values.
///
/// # Safety
/// `values` must be valid for `(steps + 1) * dim` reads; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_path_from_values(
    horizon: f64,
    steps: usize,
    dim: usize,
    values: *const f64,
    out: *mut *mut RrPath,
) -> RrStatus {
    guard(|| {
        let grid = Grid::new(horizon, steps)?;
        let v = slice(values, grid.len().saturating_mul(dim))?;
        emit(out, RrPath(GridPath::new(grid, dim, v.to_vec())?))
    })
}

/// Brownian path started at zero, from stream `stream` of seed `master`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_path_bm(
    horizon: f64,
    steps: usize,
    dim: usize,
    master: u64,
    stream: u64,
    out: *mut *mut RrPath,
) -> RrStatus {
    guard(|| {
        let grid = Grid::new(horizon, steps)?;
        emit(out, RrPath(gen_bm(grid, dim, Seed::new(master, stream))?))
    })
}

/// Fractional Brownian path with independent components.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_path_fbm(
    horizon: f64,
    steps: usize,
    hurst: f64,
    dim: usize,
    master: u64,
    stream: u64,
    out: *mut *mut RrPath,
) -> RrStatus {
    guard(|| {
        let grid = Grid::new(horizon, steps)?;
        emit(out, RrPath(gen_fbm(grid, hurst, dim, Seed::new(master, stream))?))
    })
}

/// Grid steps and dimension of a path.
///
/// # Safety
/// `path` must be a live handle; `steps` and `dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_path_shape(path: *const RrPath, steps: *mut usize, dim: *mut usize) -> RrStatus {
    guard(|| {
        let p = &href(path)?.0;
        if steps.is_null() || dim.is_null() {
            return Err(Fail(RrStatus::NullPointer, "null shape output".into()));
        }
        *steps = p.grid().steps();
        *dim = p.dim();
        Ok(())
    })
}

/// Copies the row-major values of a path.
///
/// # Safety
/// `path` must be a live handle; `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn rr_path_values(path: *const RrPath, out: *mut f64, len: usize) -> RrStatus {
    guard(|| write_out(out, len, href(path)?.0.values()))
}

/// # Safety
/// `path` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rr_path_free(path: *mut RrPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Second-order enhancement of a path.
///
/// # Safety
/// `path` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_enhance(path: *const RrPath, flavor: RrFlavor, out: *mut *mut RrEnhanced) -> RrStatus {
    guard(|| {
        let fl = match flavor {
            RrFlavor::Ito => Flavor::Ito,
            RrFlavor::Strat => Flavor::Strat,
        };
        emit(out, RrEnhanced(enhance(&href(path)?.0, fl)?))
    })
}

/// `XX_{t_j, t_k}` as a `dim x dim` block.
///
/// # Safety
/// `e` must be a live handle; `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn rr_enhanced_block(e: *const RrEnhanced, j: usize, k: usize, out: *mut f64, len: usize) -> RrStatus {
    guard(|| {
        let e = &href(e)?.0;
        let n = e.grid().steps();
        if j > n || k > n {
            return Err(Fail(RrStatus::InvalidArgument, format!("node out of range 0..={n}")));
        }
        write_out(out, len, &e.block(j, k).data)
    })
}

/// Chen residual on the triple `j <= m <= k`.
///
/// # Safety
/// `e` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_chen_residual(e: *const RrEnhanced, j: usize, m: usize, k: usize, out: *mut f64) -> RrStatus {
    guard(|| {
        let e = &href(e)?.0;
        if k > e.grid().steps() {
            return Err(Fail(RrStatus::InvalidArgument, "node out of range".into()));
        }
        write_out(out, 1, &[chen_residual(e, j, m, k)?])
    })
}

/// # Safety
/// `e` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rr_enhanced_free(e: *mut RrEnhanced) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Pair from explicit arrays: `y` is `(steps + 1) x n`, `yprime` is
/// `(steps + 1) x n x dim`, both row-major, over the grid of `x`.
///
/// # Safety
/// `x` must be a live handle and the arrays valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn rr_pair_from_arrays(
    x: *const RrPath,
    n: usize,
    y: *const f64,
    yprime: *const f64,
    out: *mut *mut RrPair,
) -> RrStatus {
    guard(|| {
        let x = &href(x)?.0;
        let grid = *x.grid();
        let y = GridPath::new(grid, n, slice(y, grid.len().saturating_mul(n))?.to_vec())?;
        let yp_len = grid.len().saturating_mul(n).saturating_mul(x.dim());
        let yp = MatrixPath::new(grid, n, x.dim(), slice(yprime, yp_len)?.to_vec())?;
        emit(out, RrPair(ControlledPair::new(y, yp, x.clone(), PairLabel::Custom)?))
    })
}

/// Pair `(f(X), grad f(X)^T)` from callbacks; the gradient is checked against
/// finite differences.
///
/// # Safety
/// `x` must be a live handle; the callbacks must be safe to call with `user`.
#[no_mangle]
pub unsafe extern "C" fn rr_pair_gradient(
    x: *const RrPath,
    f: RrScalarFn,
    grad: RrGradFn,
    user: *mut c_void,
    out: *mut *mut RrPair,
) -> RrStatus {
    guard(|| {
        let x = &href(x)?.0;
        let (f, grad) = match (f, grad) {
            (Some(f), Some(g)) => (f, g),
            _ => return Err(Fail(RrStatus::NullPointer, "null callback".into())),
        };
        let fr = |v: &[f64]| f(v.as_ptr(), v.len(), user);
        let gr = |v: &[f64], o: &mut [f64]| grad(v.as_ptr(), v.len(), o.as_mut_ptr(), user);
        emit(out, RrPair(pair_gradient(&fr, &gr, x)?))
    })
}

/// Rows `n` of `Y` and columns `dim` of `X` for a pair.
///
/// # Safety
/// `pair` must be a live handle; `n` and `dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_pair_shape(pair: *const RrPair, n: *mut usize, dim: *mut usize) -> RrStatus {
    guard(|| {
        let p = &href(pair)?.0;
        if n.is_null() || dim.is_null() {
            return Err(Fail(RrStatus::NullPointer, "null shape output".into()));
        }
        *n = p.y().dim();
        *dim = p.x().dim();
        Ok(())
    })
}

/// # Safety
/// `pair` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rr_pair_free(pair: *mut RrPair) {
    if !pair.is_null() {
        drop(Box::from_raw(pair));
    }
}

/// Regularized rough integral on `[0, t]`, an `n x dim` matrix.
///
/// # Safety
/// Handles must be live; `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn rr_rough_integral_reg(
    pair: *const RrPair,
    e: *const RrEnhanced,
    eps: f64,
    t: f64,
    out: *mut f64,
    len: usize,
) -> RrStatus {
    guard(|| write_out(out, len, &rough_integral_reg(&href(pair)?.0, &href(e)?.0, eps, t)?.data))
}

/// Backward rough integral on `[0, t]`, an `n x dim` matrix.
///
/// # Safety
/// Handles must be live; `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn rr_rough_integral_backward(
    pair: *const RrPair,
    e: *const RrEnhanced,
    eps: f64,
    t: f64,
    out: *mut f64,
    len: usize,
) -> RrStatus {
    guard(|| write_out(out, len, &rough_integral_backward(&href(pair)?.0, &href(e)?.0, eps, t)?.data))
}

/// Dyadic sewing of the germ on `[0, t]`. `converged` is set to 0 when the
/// tolerance was not reached; the finest value is still written.
///
/// # Safety
/// Handles must be live; `out` must be valid for `len` writes and the scalar
/// outputs writable.
#[no_mangle]
pub unsafe extern "C" fn rr_sewing_integral(
    pair: *const RrPair,
    e: *const RrEnhanced,
    t: f64,
    tol: f64,
    max_level: usize,
    out: *mut f64,
    len: usize,
    level: *mut usize,
    delta: *mut f64,
    converged: *mut i32,
) -> RrStatus {
    guard(|| {
        if level.is_null() || delta.is_null() || converged.is_null() {
            return Err(Fail(RrStatus::NullPointer, "null sewing output".into()));
        }
        let res = sewing_integral(&href(pair)?.0, &href(e)?.0, &[t], tol, max_level)?;
        write_out(out, len, &res.values[0].data)?;
        *level = res.level;
        *delta = res.delta;
        *converged = res.converged as i32;
        Ok(())
    })
}

/// Scalar quadratic variation `[X, X]^R` at width `eps` on `[0, t]`.
///
/// # Safety
/// `path` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_scalar_qv(path: *const RrPath, eps: f64, t: f64, out: *mut f64) -> RrStatus {
    guard(|| write_out(out, 1, &[scalar_qv(&href(path)?.0, eps, t)?]))
}

/// Regularized covariation `C(eps, X1, X2)(t)` of two scalar paths.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_c_eps(x1: *const RrPath, x2: *const RrPath, eps: f64, t: f64, out: *mut f64) -> RrStatus {
    guard(|| write_out(out, 1, &[c_eps(&href(x1)?.0, &href(x2)?.0, eps, t)?]))
}

/// Orthogonality statistic of a pair's remainder.
///
/// # Safety
/// `pair` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_orthogonality_stat(pair: *const RrPair, eps: f64, t: f64, out: *mut f64) -> RrStatus {
    guard(|| write_out(out, 1, &[orthogonality_stat(&href(pair)?.0, eps, t)?]))
}
