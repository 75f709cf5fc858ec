//! C ABI over `beta_takagi`.
//!
//! Objects cross the boundary as opaque handles (`BtBase`, `BtDensity`)
//! created by `*_new` and released by the matching `*_free`. Every function
//! returns a [`BtStatus`]; on failure a description is available from
//! [`bt_last_error_message`] on the same thread. Strings handed out by the
//! library must be released with [`bt_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use beta_takagi::dynamics::{digits, parse_point};
use beta_takagi::measure::{build_density, PiecewiseDensity};
use beta_takagi::stats::{clt_run, ks_statistic, CltConfig, OrbitMode};
use beta_takagi::takagi::{default_depth, evaluate};
use beta_takagi::{BetaParam, Enclosure, Error};

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Precision = 4,
    Ambiguous = 5,
    Sampling = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Midpoint and radius of a certified enclosure, rounded to `double`.
/// The radius is rounded up, so `[value - radius, value + radius]` still
/// contains the true quantity up to one ulp of `value`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BtValue {
    pub value: f64,
    pub radius: f64,
}

/// Summary of a CLT run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BtCltSummary {
    pub mean: f64,
    pub v_hat: f64,
    pub ks_distance: f64,
}

/// Opaque base handle.
pub struct BtBase(BetaParam);

/// Opaque invariant-density handle.
pub struct BtDensity(PiecewiseDensity);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> BtStatus {
    match err {
        Error::AmbiguousBranch { .. } => BtStatus::Ambiguous,
        Error::InsufficientPrecision { .. } => BtStatus::Precision,
        Error::SampleBudgetExceeded { .. } | Error::EmptySample => BtStatus::Sampling,
        Error::InvalidParameter(_) | Error::Parse(_) | Error::InvalidDigits(_) => {
            BtStatus::InvalidArgument
        }
        _ => BtStatus::Domain,
    }
}

fn guard(f: impl FnOnce() -> Result<(), BtStatus>) -> BtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BtStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            BtStatus::Panic
        }
    }
}

fn lift<T>(r: beta_takagi::Result<T>) -> Result<T, BtStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null() -> BtStatus {
    set_error("null pointer argument");
    BtStatus::NullPointer
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, BtStatus> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        BtStatus::InvalidArgument
    })
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, BtStatus> {
    p.as_ref().ok_or_else(null)
}

fn ball(e: &Enclosure) -> BtValue {
    let (value, radius) = e.to_f64_ball();
    BtValue { value, radius }
}

fn finite(x: f64, prec: u32) -> Result<Enclosure, BtStatus> {
    if x.is_finite() {
        Ok(Enclosure::from_f64(prec, x))
    } else {
        set_error("argument is not a finite number");
        Err(BtStatus::InvalidArgument)
    }
}

unsafe fn store<T>(out: *mut T, v: T) -> Result<(), BtStatus> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

/// Creates a base from text (`"2"`, `"17/10"`, `"golden"`, …) at the given
/// working precision.
///
/// # Safety
/// `beta` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bt_base_new(
    beta: *const c_char,
    precision_bits: u32,
    out: *mut *mut BtBase,
) -> BtStatus {
    guard(|| {
        let b = lift(BetaParam::parse(text(beta)?, precision_bits))?;
        store(out, Box::into_raw(Box::new(BtBase(b))))
    })
}

/// Releases a base. Null is ignored.
///
/// # Safety
/// `base` must come from [`bt_base_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bt_base_free(base: *mut BtBase) {
    if !base.is_null() {
        drop(Box::from_raw(base));
    }
}

/// Writes the first `n` greedy digits of `x` into `buf` (one byte per digit,
/// values 0 or 1). `buf_len` must be at least `n`.
///
/// # Safety
/// Pointers must be valid; `buf` must hold `buf_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn bt_digits(
    base: *const BtBase,
    x: *const c_char,
    n: usize,
    buf: *mut u8,
    buf_len: usize,
) -> BtStatus {
    guard(|| {
        let b = &handle(base)?.0;
        if buf.is_null() {
            return Err(null());
        }
        if buf_len < n {
            set_error(format!("buffer holds {buf_len} digits, need {n}"));
            return Err(BtStatus::BufferTooSmall);
        }
        let p = lift(parse_point(b, text(x)?))?;
        let g = lift(digits(b, &p, n))?;
        if !g.certified {
            set_error("digit extraction was not certified at this precision");
            return Err(BtStatus::Ambiguous);
        }
        ptr::copy_nonoverlapping(g.digits.as_ptr(), buf, n);
        Ok(())
    })
}

/// Builds the invariant density. `k = 0` selects the default truncation.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bt_density_new(
    base: *const BtBase,
    k: usize,
    out: *mut *mut BtDensity,
) -> BtStatus {
    guard(|| {
        let b = &handle(base)?.0;
        let d = lift(build_density(b, (k > 0).then_some(k)))?;
        store(out, Box::into_raw(Box::new(BtDensity(d))))
    })
}

/// Releases a density. Null is ignored.
///
/// # Safety
/// `density` must come from [`bt_density_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bt_density_free(density: *mut BtDensity) {
    if !density.is_null() {
        drop(Box::from_raw(density));
    }
}

/// Normalizing constant `F` and the digit mean `M`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bt_density_constants(
    density: *const BtDensity,
    f: *mut BtValue,
    m: *mut BtValue,
) -> BtStatus {
    guard(|| {
        let d = &handle(density)?.0;
        store(f, ball(&d.f))?;
        store(m, ball(&d.m))
    })
}

/// Normalized density at `x`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bt_density_eval(
    density: *const BtDensity,
    x: f64,
    out: *mut BtValue,
) -> BtStatus {
    guard(|| {
        let d = &handle(density)?.0;
        let e = finite(x, d.precision_bits())?;
        let v = lift(d.density_eval(&e))?;
        store(out, ball(&v))
    })
}

/// Invariant measure of `[a, b]`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bt_interval_measure(
    density: *const BtDensity,
    a: f64,
    b: f64,
    out: *mut BtValue,
) -> BtStatus {
    guard(|| {
        let d = &handle(density)?.0;
        let p = d.precision_bits();
        let (ea, eb) = (
            finite(a, p)?,
            finite(b, p)?,
        );
        store(out, ball(&lift(d.interval_measure(&ea, &eb))?))
    })
}

/// Generalized Takagi value at `x`; `depth = 0` selects the default depth.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bt_eval_takagi(
    base: *const BtBase,
    density: *const BtDensity,
    x: *const c_char,
    depth: usize,
    out: *mut BtValue,
) -> BtStatus {
    guard(|| {
        let b = &handle(base)?.0;
        let d = &handle(density)?.0;
        let depth = if depth == 0 { default_depth(b, &d.m) } else { depth };
        let p = lift(parse_point(b, text(x)?))?;
        let e = lift(evaluate(b, &p, &d.m, depth))?;
        store(out, ball(&e.value_def))
    })
}

/// Kolmogorov-Smirnov distance of `len` samples to the standard normal law.
///
/// # Safety
/// `samples` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bt_ks_statistic(
    samples: *const f64,
    len: usize,
    out: *mut f64,
) -> BtStatus {
    guard(|| {
        if samples.is_null() {
            return Err(null());
        }
        let xs = std::slice::from_raw_parts(samples, len);
        store(out, lift(ks_statistic(xs))?)
    })
}

/// Runs `m` fast-mode orbits of length `n` and summarizes the normalized
/// digit sums. When `sums` is non-null it receives the `m` normalized sums
/// (`sums_len >= m`).
///
/// # Safety
/// Pointers must be valid; `sums` must hold `sums_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bt_clt_run(
    base: *const BtBase,
    density: *const BtDensity,
    n: usize,
    m: usize,
    seed: u64,
    summary: *mut BtCltSummary,
    sums: *mut f64,
    sums_len: usize,
) -> BtStatus {
    guard(|| {
        let b = &handle(base)?.0;
        let d = &handle(density)?.0;
        if !sums.is_null() && sums_len < m {
            set_error(format!("buffer holds {sums_len} values, need {m}"));
            return Err(BtStatus::BufferTooSmall);
        }
        let cfg = CltConfig {
            n,
            m,
            seed,
            mode: OrbitMode::Fast,
            bins: 40,
        };
        let r = lift(clt_run(b, d, &cfg))?;
        if !sums.is_null() {
            ptr::copy_nonoverlapping(r.normalized_sums.as_ptr(), sums, m);
        }
        store(
            summary,
            BtCltSummary {
                mean: r.mean,
                v_hat: r.v_hat,
                ks_distance: r.ks_distance,
            },
        )
    })
}

/// Message for the last failure on this thread, or null. The caller owns
/// the returned string.
#[no_mangle]
pub extern "C" fn bt_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(ptr::null_mut(), |s| s.clone().into_raw())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
