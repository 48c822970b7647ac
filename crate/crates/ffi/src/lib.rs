//! C ABI over `gradflow`.
//!
//! Objects cross the boundary as opaque heap handles that the caller owns
//! and releases with the matching `*_free`. Every entry point returns a
//! [`GfStatus`]; on failure a message is kept per thread and can be read
//! with [`gf_last_error_message`]. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gradflow::exponents::{
    estimate_asymptotic_critical_value, estimate_characteristic_exponent, DEFAULT_DENOMINATOR_BOUND,
};
use gradflow::flow::{integrate_trajectory, IntegratorConfig, Termination, TrajectoryRecord};
use gradflow::polyfun::PolynomialFunction;
use gradflow::scalar::Precision;
use gradflow::scenarios::{builtin, run_scenario};
use num_rational::Rational64;

/// Tail share used by the exponent and critical-value estimators.
const TAIL_FRACTION: f64 = 0.2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    OutOfRange = 5,
    Flow = 6,
    Estimate = 7,
    Scenario = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GfPrecision {
    Double = 0,
    Extended = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GfTermination {
    ReachedRMin = 0,
    GradientVanished = 1,
    StepBudget = 2,
    LeftDomain = 3,
}

/// Integrator settings. Fill with [`gf_integrator_config_default`] and then
/// adjust individual fields.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GfIntegratorConfig {
    pub r_min: f64,
    pub rel_tol: f64,
    /// Relative to the current radius.
    pub abs_tol: f64,
    pub step_fraction: f64,
    pub max_steps: u64,
    /// A [`GfPrecision`] value.
    pub precision: u32,
}

/// Scalar data of one recorded trajectory point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GfSample {
    pub s: f64,
    pub s_tilde: f64,
    pub r: f64,
    pub f: f64,
    pub radial: f64,
    pub spherical_norm: f64,
}

/// Check tally of one scenario run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GfScenarioResult {
    pub checks_total: usize,
    pub checks_failed: usize,
    pub starts: usize,
}

/// Opaque polynomial handle.
pub struct GfPolynomial(PolynomialFunction);

/// Opaque trajectory handle.
pub struct GfTrajectory(TrajectoryRecord);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: GfStatus, msg: impl std::fmt::Display) -> GfStatus {
    set_error(msg.to_string());
    status
}

/// Runs `body`, mapping a panic to [`GfStatus::Panic`] and clearing the
/// error slot on success.
fn guard(body: impl FnOnce() -> GfStatus) -> GfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(GfStatus::Ok) => {
            set_error("");
            GfStatus::Ok
        }
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(GfStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, GfStatus> {
    if p.is_null() {
        return Err(fail(GfStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p).to_str().map_err(|e| fail(GfStatus::InvalidUtf8, e))
}

unsafe fn slice<'a>(p: *const f64, n: usize) -> Result<&'a [f64], GfStatus> {
    if p.is_null() {
        return Err(fail(GfStatus::NullPointer, "null array"));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, GfStatus> {
    p.as_mut().ok_or_else(|| fail(GfStatus::NullPointer, "null output pointer"))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

fn precision_from(code: u32) -> Result<Precision, GfStatus> {
    match code {
        c if c == GfPrecision::Double as u32 => Ok(Precision::Double),
        c if c == GfPrecision::Extended as u32 => Ok(Precision::Extended),
        c => Err(fail(GfStatus::InvalidArgument, format!("unknown precision code {c}"))),
    }
}

fn config_from(c: &GfIntegratorConfig) -> Result<IntegratorConfig, GfStatus> {
    let cfg = IntegratorConfig {
        r_min: c.r_min,
        rel_tol: c.rel_tol,
        abs_tol: c.abs_tol,
        step_fraction: c.step_fraction,
        max_steps: c.max_steps,
        ..IntegratorConfig::for_precision(precision_from(c.precision)?)
    };
    cfg.validate().map_err(|e| fail(GfStatus::InvalidArgument, e))?;
    Ok(cfg)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf`.
///
/// `needed` receives the message length including the terminator. With a
/// null or short `buf` nothing is copied and `BufferTooSmall` is returned.
///
/// # Safety
/// `buf` must be null or writable for `len` bytes; `needed` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn gf_last_error_message(buf: *mut c_char, len: usize, needed: *mut usize) -> GfStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    let bytes = msg.as_bytes();
    if let Some(n) = needed.as_mut() {
        *n = bytes.len() + 1;
    }
    if buf.is_null() || len < bytes.len() + 1 {
        return GfStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
    *buf.add(bytes.len()) = 0;
    GfStatus::Ok
}

/// Parses a polynomial in `x1, x2, ...`. `dimension = 0` infers it from the
/// highest variable index.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gf_polynomial_parse(
    text: *const c_char,
    dimension: usize,
    out: *mut *mut GfPolynomial,
) -> GfStatus {
    guard(|| {
        let out = tri!(out_ref(out));
        *out = ptr::null_mut();
        let text = tri!(c_str(text));
        let parsed = if dimension == 0 {
            PolynomialFunction::parse(text)
        } else {
            PolynomialFunction::parse_with_dimension(text, dimension)
        };
        match parsed {
            Ok(f) => {
                *out = Box::into_raw(Box::new(GfPolynomial(f)));
                GfStatus::Ok
            }
            Err(e) => fail(GfStatus::Parse, e),
        }
    })
}

/// # Safety
/// `p` must be null or a handle from [`gf_polynomial_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gf_polynomial_free(p: *mut GfPolynomial) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gf_polynomial_dimension(p: *const GfPolynomial, out: *mut usize) -> GfStatus {
    guard(|| {
        let Some(p) = p.as_ref() else { return fail(GfStatus::NullPointer, "null polynomial") };
        *tri!(out_ref(out)) = p.0.dimension();
        GfStatus::Ok
    })
}

/// Value of `f` at `x[0..n]`.
///
/// # Safety
/// `p` must be a live handle, `x` readable for `n` values, `value` valid.
#[no_mangle]
pub unsafe extern "C" fn gf_polynomial_evaluate(
    p: *const GfPolynomial,
    x: *const f64,
    n: usize,
    value: *mut f64,
) -> GfStatus {
    guard(|| {
        let Some(p) = p.as_ref() else { return fail(GfStatus::NullPointer, "null polynomial") };
        let x = tri!(slice(x, n));
        let value = tri!(out_ref(value));
        match p.0.evaluate(x) {
            Ok(v) => {
                *value = v;
                GfStatus::Ok
            }
            Err(e) => fail(GfStatus::InvalidArgument, e),
        }
    })
}

/// Gradient of `f` at `x[0..n]`, written to `grad[0..n]`.
///
/// # Safety
/// `p` must be a live handle; `x` readable and `grad` writable for `n` values.
#[no_mangle]
pub unsafe extern "C" fn gf_polynomial_gradient(
    p: *const GfPolynomial,
    x: *const f64,
    n: usize,
    grad: *mut f64,
) -> GfStatus {
    guard(|| {
        let Some(p) = p.as_ref() else { return fail(GfStatus::NullPointer, "null polynomial") };
        let x = tri!(slice(x, n));
        if grad.is_null() {
            return fail(GfStatus::NullPointer, "null gradient buffer");
        }
        match p.0.gradient(x) {
            Ok(g) => {
                ptr::copy_nonoverlapping(g.as_ptr(), grad, n);
                GfStatus::Ok
            }
            Err(e) => fail(GfStatus::InvalidArgument, e),
        }
    })
}

/// Defaults for the [`GfPrecision`] code `precision`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gf_integrator_config_default(precision: u32, out: *mut GfIntegratorConfig) -> GfStatus {
    guard(|| {
        let out = tri!(out_ref(out));
        let c = IntegratorConfig::for_precision(tri!(precision_from(precision)));
        *out = GfIntegratorConfig {
            r_min: c.r_min,
            rel_tol: c.rel_tol,
            abs_tol: c.abs_tol,
            step_fraction: c.step_fraction,
            max_steps: c.max_steps,
            precision,
        };
        GfStatus::Ok
    })
}

/// Integrates the unit-speed gradient flow of `p` from `x0[0..n]`.
/// A null `config` selects the binary64 defaults.
///
/// # Safety
/// `p` must be a live handle, `x0` readable for `n` values, `config` null
/// or valid, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gf_integrate(
    p: *const GfPolynomial,
    x0: *const f64,
    n: usize,
    config: *const GfIntegratorConfig,
    out: *mut *mut GfTrajectory,
) -> GfStatus {
    guard(|| {
        let out = tri!(out_ref(out));
        *out = ptr::null_mut();
        let Some(p) = p.as_ref() else { return fail(GfStatus::NullPointer, "null polynomial") };
        let x0 = tri!(slice(x0, n));
        let cfg = match config.as_ref() {
            None => IntegratorConfig::default(),
            Some(c) => tri!(config_from(c)),
        };
        match integrate_trajectory(&p.0, x0, &cfg) {
            Ok(rec) => {
                *out = Box::into_raw(Box::new(GfTrajectory(rec)));
                GfStatus::Ok
            }
            Err(e) => fail(GfStatus::Flow, e),
        }
    })
}

/// # Safety
/// `t` must be null or a handle from [`gf_integrate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gf_trajectory_free(t: *mut GfTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

unsafe fn traj<'a>(t: *const GfTrajectory) -> Result<&'a TrajectoryRecord, GfStatus> {
    t.as_ref().map(|t| &t.0).ok_or_else(|| fail(GfStatus::NullPointer, "null trajectory"))
}

/// Number of recorded samples.
///
/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gf_trajectory_len(t: *const GfTrajectory, out: *mut usize) -> GfStatus {
    guard(|| {
        let t = tri!(traj(t));
        *tri!(out_ref(out)) = t.len();
        GfStatus::Ok
    })
}

/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gf_trajectory_termination(t: *const GfTrajectory, out: *mut GfTermination) -> GfStatus {
    guard(|| {
        let t = tri!(traj(t));
        *tri!(out_ref(out)) = match t.termination {
            Termination::ReachedRMin => GfTermination::ReachedRMin,
            Termination::GradientVanished => GfTermination::GradientVanished,
            Termination::StepBudget => GfTermination::StepBudget,
            Termination::LeftDomain => GfTermination::LeftDomain,
        };
        GfStatus::Ok
    })
}

/// Scalar fields of sample `i`.
///
/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gf_trajectory_sample(t: *const GfTrajectory, i: usize, out: *mut GfSample) -> GfStatus {
    guard(|| {
        let t = tri!(traj(t));
        let out = tri!(out_ref(out));
        let Some(s) = t.samples.get(i) else {
            return fail(GfStatus::OutOfRange, format!("sample {i} of {}", t.len()));
        };
        *out = GfSample {
            s: s.s,
            s_tilde: s.s_tilde,
            r: s.r,
            f: s.f_val,
            radial: s.split.radial,
            spherical_norm: s.split.spherical_norm,
        };
        GfStatus::Ok
    })
}

/// Coordinates of sample `i`, written to `x[0..n]`; `n` must equal the dimension.
///
/// # Safety
/// `t` must be a live handle; `x` writable for `n` values.
#[no_mangle]
pub unsafe extern "C" fn gf_trajectory_point(t: *const GfTrajectory, i: usize, x: *mut f64, n: usize) -> GfStatus {
    guard(|| {
        let t = tri!(traj(t));
        if x.is_null() {
            return fail(GfStatus::NullPointer, "null point buffer");
        }
        let Some(s) = t.samples.get(i) else {
            return fail(GfStatus::OutOfRange, format!("sample {i} of {}", t.len()));
        };
        if n != s.x.len() {
            return fail(GfStatus::InvalidArgument, format!("buffer holds {n}, dimension is {}", s.x.len()));
        }
        ptr::copy_nonoverlapping(s.x.as_ptr(), x, n);
        GfStatus::Ok
    })
}

/// Total arc length of the radial projection onto the unit sphere.
///
/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gf_trajectory_spherical_length(t: *const GfTrajectory, out: *mut f64) -> GfStatus {
    guard(|| {
        let t = tri!(traj(t));
        *tri!(out_ref(out)) = t.spherical_length();
        GfStatus::Ok
    })
}

/// Characteristic exponent as `num/den`, with the unrounded tail limit in `raw`.
///
/// # Safety
/// `t` must be a live handle; the outputs valid pointers (`raw` may be null).
#[no_mangle]
pub unsafe extern "C" fn gf_estimate_exponent(
    t: *const GfTrajectory,
    num: *mut i64,
    den: *mut i64,
    raw: *mut f64,
) -> GfStatus {
    guard(|| {
        let t = tri!(traj(t));
        let num = tri!(out_ref(num));
        let den = tri!(out_ref(den));
        match estimate_characteristic_exponent(t, TAIL_FRACTION, DEFAULT_DENOMINATOR_BOUND) {
            Ok(rep) => {
                *num = *rep.l_hat.numer();
                *den = *rep.l_hat.denom();
                if let Some(r) = raw.as_mut() {
                    *r = rep.raw_limit;
                }
                GfStatus::Ok
            }
            Err(e) => fail(GfStatus::Estimate, e),
        }
    })
}

/// Limit of `f/r^l` along the trajectory for `l = l_num/l_den`.
///
/// # Safety
/// `t` must be a live handle; `a` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gf_estimate_critical_value(
    t: *const GfTrajectory,
    l_num: i64,
    l_den: i64,
    a: *mut f64,
) -> GfStatus {
    guard(|| {
        let t = tri!(traj(t));
        let a = tri!(out_ref(a));
        if l_den == 0 {
            return fail(GfStatus::InvalidArgument, "zero denominator");
        }
        match estimate_asymptotic_critical_value(t, Rational64::new(l_num, l_den), TAIL_FRACTION) {
            Ok((v, _)) => {
                *a = v;
                GfStatus::Ok
            }
            Err(e) => fail(GfStatus::Estimate, e),
        }
    })
}

/// Runs a shipped scenario with all its checks. Failed checks are counted in
/// `out`, not reported as an error status.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gf_scenario_run(name: *const c_char, out: *mut GfScenarioResult) -> GfStatus {
    guard(|| {
        let out = tri!(out_ref(out));
        let name = tri!(c_str(name));
        let sc = match builtin(name) {
            Ok(sc) => sc,
            Err(e) => return fail(GfStatus::Scenario, e),
        };
        match run_scenario(&sc) {
            Ok(run) => {
                *out = GfScenarioResult {
                    checks_total: run.checks.len(),
                    checks_failed: run.failures().count(),
                    starts: run.starts.len(),
                };
                GfStatus::Ok
            }
            Err(e) => fail(GfStatus::Scenario, e),
        }
    })
}
