//! C ABI over `julia-pressure`.
//!
//! Objects are opaque handles created by `jp_*_new` and released by the
//! matching `jp_*_free`. Every fallible call returns a [`JpStatus`]; on failure
//! the message is available from [`jp_last_error`] on the same thread. Panics
//! never cross the boundary and are reported as `JP_STATUS_PANIC`.

use julia_pressure::bowen::{bowen_root, BowenError, BowenOptions};
use julia_pressure::pressure::p_p;
use julia_pressure::{
    inverse_iteration_sample, FilterParams, PeriodicEnumerator, Point, Potential, RationalMap, SearchOptions,
};
use num_complex::Complex64;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    MapError = 3,
    SampleError = 4,
    ComputeError = 5,
    Panic = 6,
}

/// A rational map `P/Q`.
pub struct JpMap(RationalMap);

/// A map together with a Julia-set sample and its periodic-point cache.
pub struct JpEnumerator(PeriodicEnumerator);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

type Outcome = Result<(), (JpStatus, String)>;

fn guard(body: impl FnOnce() -> Outcome) -> JpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => JpStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            JpStatus::Panic
        }
    }
}

fn null(name: &str) -> (JpStatus, String) {
    (JpStatus::NullPointer, format!("{name} is null"))
}

fn invalid(message: impl ToString) -> (JpStatus, String) {
    (JpStatus::InvalidArgument, message.to_string())
}

fn compute(message: impl ToString) -> (JpStatus, String) {
    (JpStatus::ComputeError, message.to_string())
}

unsafe fn coeffs(re: *const f64, im: *const f64, len: usize, name: &str) -> Result<Vec<Complex64>, (JpStatus, String)> {
    if len == 0 {
        return Err(invalid(format!("{name} has no coefficients")));
    }
    if re.is_null() {
        return Err(null(name));
    }
    let re = std::slice::from_raw_parts(re, len);
    let im = if im.is_null() { None } else { Some(std::slice::from_raw_parts(im, len)) };
    Ok((0..len)
        .map(|k| Complex64::new(re[k], im.map_or(0.0, |v| v[k])))
        .collect())
}

unsafe fn potential(text: *const c_char) -> Result<Potential, (JpStatus, String)> {
    if text.is_null() {
        return Ok(Potential::zero());
    }
    let s = CStr::from_ptr(text).to_str().map_err(|_| invalid("potential is not UTF-8"))?;
    Potential::parse(s).map_err(invalid)
}

/// Message of the last failed call on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn jp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds `P/Q` from ascending coefficient arrays. `*_im` may be null for real
/// coefficients; `den_len == 0` means `Q = 1`.
///
/// # Safety
/// Non-null arrays must hold the stated number of elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jp_map_new(
    num_re: *const f64,
    num_im: *const f64,
    num_len: usize,
    den_re: *const f64,
    den_im: *const f64,
    den_len: usize,
    out: *mut *mut JpMap,
) -> JpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let num = coeffs(num_re, num_im, num_len, "numerator")?;
        let den = if den_len == 0 {
            vec![Complex64::new(1.0, 0.0)]
        } else {
            coeffs(den_re, den_im, den_len, "denominator")?
        };
        let map = RationalMap::new(num, den).map_err(|e| (JpStatus::MapError, e.to_string()))?;
        *out = Box::into_raw(Box::new(JpMap(map)));
        Ok(())
    })
}

/// Builds `z^2 + c`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jp_map_quadratic(c_re: f64, c_im: f64, out: *mut *mut JpMap) -> JpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(c_re.is_finite() && c_im.is_finite()) {
            return Err(invalid("c must be finite"));
        }
        *out = Box::into_raw(Box::new(JpMap(RationalMap::quadratic(Complex64::new(c_re, c_im)))));
        Ok(())
    })
}

/// # Safety
/// `map` must be null or a handle from `jp_map_new`/`jp_map_quadratic` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jp_map_free(map: *mut JpMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// # Safety
/// `map` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jp_map_degree(map: *const JpMap, out: *mut usize) -> JpStatus {
    guard(|| {
        let map = map.as_ref().ok_or_else(|| null("map"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = map.0.degree();
        Ok(())
    })
}

/// Evaluates `f(z)`. `*out_infinite` is set to 1 when `f(z) = infinity`, in
/// which case the coordinates are left untouched.
///
/// # Safety
/// `map` must be a live handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn jp_map_eval(
    map: *const JpMap,
    re: f64,
    im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
    out_infinite: *mut i32,
) -> JpStatus {
    guard(|| {
        let map = map.as_ref().ok_or_else(|| null("map"))?;
        if out_re.is_null() || out_im.is_null() || out_infinite.is_null() {
            return Err(null("output"));
        }
        match map.0.eval(Complex64::new(re, im)).map_err(|e| (JpStatus::MapError, e.to_string()))? {
            Point::Finite(w) => {
                *out_re = w.re;
                *out_im = w.im;
                *out_infinite = 0;
            }
            Point::Infinity => *out_infinite = 1,
        }
        Ok(())
    })
}

/// Samples the Julia set by inverse iteration and prepares periodic-point
/// enumeration with default search options. The map is copied.
///
/// # Safety
/// `map` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jp_enumerator_new(
    map: *const JpMap,
    sample_count: usize,
    depth: usize,
    seed: u64,
    out: *mut *mut JpEnumerator,
) -> JpStatus {
    guard(|| {
        let map = map.as_ref().ok_or_else(|| null("map"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sample = inverse_iteration_sample(&map.0, sample_count, depth, seed)
            .map_err(|e| (JpStatus::SampleError, e.to_string()))?;
        let e = PeriodicEnumerator::new(map.0.clone(), sample, SearchOptions::default());
        *out = Box::into_raw(Box::new(JpEnumerator(e)));
        Ok(())
    })
}

/// # Safety
/// `e` must be null or a handle from `jp_enumerator_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jp_enumerator_free(e: *mut JpEnumerator) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// # Safety
/// `e` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jp_sample_len(e: *const JpEnumerator, out: *mut usize) -> JpStatus {
    guard(|| {
        let e = e.as_ref().ok_or_else(|| null("enumerator"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = e.0.sample().len();
        Ok(())
    })
}

/// Copies up to `cap` sample points into `re`/`im`; `*out_len` receives the
/// number copied.
///
/// # Safety
/// `re` and `im` must hold `cap` writable elements; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jp_sample_points(
    e: *const JpEnumerator,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> JpStatus {
    guard(|| {
        let e = e.as_ref().ok_or_else(|| null("enumerator"))?;
        if out_len.is_null() || (cap > 0 && (re.is_null() || im.is_null())) {
            return Err(null("output"));
        }
        let pts = &e.0.sample().points;
        let k = pts.len().min(cap);
        for (i, z) in pts[..k].iter().enumerate() {
            *re.add(i) = z.re;
            *im.add(i) = z.im;
        }
        *out_len = k;
        Ok(())
    })
}

/// Finds the fixed points of `f^n`. `*out_found` is the number of distinct
/// points, `*out_expected` the count predicted by the degree.
///
/// # Safety
/// `e` must be a live handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn jp_periodic_count(
    e: *mut JpEnumerator,
    n: usize,
    out_found: *mut usize,
    out_expected: *mut usize,
) -> JpStatus {
    guard(|| {
        let e = e.as_mut().ok_or_else(|| null("enumerator"))?;
        if out_found.is_null() || out_expected.is_null() {
            return Err(null("output"));
        }
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        let set = e.0.find(n).map_err(compute)?;
        *out_found = set.report.found;
        *out_expected = set.report.expected;
        Ok(())
    })
}

/// Copies up to `cap` fixed points of `f^n` with the logarithm of their
/// multiplier modulus; `*out_len` receives the number copied.
///
/// # Safety
/// Non-null arrays must hold `cap` writable elements; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jp_periodic_points(
    e: *mut JpEnumerator,
    n: usize,
    re: *mut f64,
    im: *mut f64,
    log_abs_multiplier: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> JpStatus {
    guard(|| {
        let e = e.as_mut().ok_or_else(|| null("enumerator"))?;
        if out_len.is_null() || (cap > 0 && (re.is_null() || im.is_null() || log_abs_multiplier.is_null())) {
            return Err(null("output"));
        }
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        let set = e.0.find(n).map_err(compute)?;
        let k = set.points.len().min(cap);
        for (i, p) in set.points[..k].iter().enumerate() {
            *re.add(i) = p.z.re;
            *im.add(i) = p.z.im;
            *log_abs_multiplier.add(i) = p.log_abs_multiplier;
        }
        *out_len = k;
        Ok(())
    })
}

/// Periodic-point pressure of `potential` over `n_min..=n_max` with the given
/// tail window. `potential` uses the library's text form; null means zero.
///
/// # Safety
/// `e` must be a live handle; `potential_expr` must be null or NUL-terminated;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jp_pressure_pp(
    e: *mut JpEnumerator,
    potential_expr: *const c_char,
    alpha: f64,
    c: f64,
    n_min: usize,
    n_max: usize,
    window: usize,
    out: *mut f64,
) -> JpStatus {
    guard(|| {
        let e = e.as_mut().ok_or_else(|| null("enumerator"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let phi = potential(potential_expr)?;
        let params = FilterParams::new(alpha, c).map_err(invalid)?;
        let est = p_p(&mut e.0, &phi, &params, n_min..=n_max, window).map_err(compute)?;
        *out = est.value;
        Ok(())
    })
}

/// Root of `t -> P_P(-t log|f'|)` in `[t_lo, t_hi]` to within `tol`, using the
/// largest `n <= n_max` whose enumeration is complete.
///
/// # Safety
/// `e` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jp_bowen_root(
    e: *mut JpEnumerator,
    alpha: f64,
    c: f64,
    n_min: usize,
    n_max: usize,
    t_lo: f64,
    t_hi: f64,
    tol: f64,
    out: *mut f64,
) -> JpStatus {
    guard(|| {
        let e = e.as_mut().ok_or_else(|| null("enumerator"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let params = FilterParams::new(alpha, c).map_err(invalid)?;
        let mut opts = BowenOptions::new((t_lo, t_hi));
        opts.tol = tol;
        let res = bowen_root(&mut e.0, &params, n_min..=n_max, &opts).map_err(|err| {
            match err {
                BowenError::BadBracket(..) | BowenError::BadTolerance(_) => invalid(err),
                _ => compute(err),
            }
        })?;
        *out = res.t_star;
        Ok(())
    })
}
