//! C ABI for `mequi`.
//!
//! Systems and points are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`MequiStatus`]; on failure the
//! message is available from [`mequi_last_error`] on the same thread until the
//! next failing call. Panics are caught and reported as `MEQUI_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use mequi::mef::{address, multiplicity_estimate};
use mequi::multidist::{besicovitch_estimate, dm_max, dm_min, Tuple};
use mequi::systems::{build_system, metric, seed_point, Point, PointSeed, Shape, SystemConfig, SystemSpec};
use mequi::Error;

/// Status codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MequiStatus {
    Ok = 0,
    Contract = 1,
    Horizon = 2,
    Recognizability = 3,
    IllegalWord = 4,
    InvalidSystem = 5,
    Config = 6,
    Unsupported = 7,
    Io = 8,
    NullPointer = 9,
    InvalidUtf8 = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// A dynamical system.
pub struct MequiSystem(SystemSpec);

/// A point of some system.
pub struct MequiPoint(Point);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MequiStatus {
    match e {
        Error::Contract(_) => MequiStatus::Contract,
        Error::Horizon { .. } => MequiStatus::Horizon,
        Error::Recognizability(_) => MequiStatus::Recognizability,
        Error::IllegalWord(_) => MequiStatus::IllegalWord,
        Error::InvalidSystem(_) => MequiStatus::InvalidSystem,
        Error::Config(_) => MequiStatus::Config,
        Error::Unsupported(_) => MequiStatus::Unsupported,
        Error::Io(_) => MequiStatus::Io,
    }
}

struct Fail(MequiStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MequiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MequiStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            MequiStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(MequiStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(MequiStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn tuple(sys: &SystemSpec, points: *const *const MequiPoint, m: usize) -> Result<Tuple, Fail> {
    if points.is_null() {
        return Err(null("points"));
    }
    let mut pts = Vec::with_capacity(m);
    for i in 0..m {
        pts.push(handle(*points.add(i), "point")?.0.clone());
    }
    Ok(Tuple::new(sys, pts)?)
}

/// Message of the last failure on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn mequi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mequi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a system from a TOML description (the body of a `[system]` table).
///
/// # Safety
/// `config` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mequi_system_new(config: *const c_char, out_system: *mut *mut MequiSystem) -> MequiStatus {
    guard(|| {
        let slot = out(out_system, "out_system")?;
        let cfg: SystemConfig =
            toml::from_str(text(config, "config")?).map_err(|e| Fail(MequiStatus::Config, e.to_string()))?;
        *slot = Box::into_raw(Box::new(MequiSystem(build_system(&cfg)?)));
        Ok(())
    })
}

/// # Safety
/// `system` must come from [`mequi_system_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mequi_system_free(system: *mut MequiSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Builds a point from a TOML point seed (for example `kind = "coordinate"`, `x = 0.25`).
/// Subshift windows extend `reach` cells left of the origin and `reach + horizon`
/// to the right; addresses to depth `K` need `reach` of at least `2^(K+1)` for
/// binary substitutions.
///
/// # Safety
/// Pointers must be valid; `seed` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn mequi_point_new(
    system: *const MequiSystem,
    seed: *const c_char,
    horizon: usize,
    reach: usize,
    out_point: *mut *mut MequiPoint,
) -> MequiStatus {
    guard(|| {
        let slot = out(out_point, "out_point")?;
        let sys = &handle(system, "system")?.0;
        let seed: PointSeed =
            toml::from_str(text(seed, "seed")?).map_err(|e| Fail(MequiStatus::Config, e.to_string()))?;
        let p = seed_point(sys, &seed, Shape::for_horizon(sys, horizon, reach))?;
        *slot = Box::into_raw(Box::new(MequiPoint(p)));
        Ok(())
    })
}

/// # Safety
/// `point` must come from [`mequi_point_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mequi_point_free(point: *mut MequiPoint) {
    if !point.is_null() {
        drop(Box::from_raw(point));
    }
}

/// Writes a NUL-terminated rendering of `point` into `buf`. `needed` receives the
/// required size including the terminator; `MEQUI_STATUS_BUFFER_TOO_SMALL` if `len` is short.
///
/// # Safety
/// `buf` must hold `len` bytes (it may be null when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn mequi_point_render(
    point: *const MequiPoint,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> MequiStatus {
    guard(|| {
        let s = handle(point, "point")?.0.to_string();
        let n = s.len() + 1;
        if let Some(slot) = needed.as_mut() {
            *slot = n;
        }
        if len < n {
            return Err(Fail(MequiStatus::BufferTooSmall, format!("rendering needs {n} bytes")));
        }
        std::ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
        *buf.add(s.len()) = 0;
        Ok(())
    })
}

/// Distance between two points of `system`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mequi_metric(
    system: *const MequiSystem,
    p: *const MequiPoint,
    q: *const MequiPoint,
    out_value: *mut f64,
) -> MequiStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let sys = &handle(system, "system")?.0;
        *slot = metric(sys, &handle(p, "p")?.0, &handle(q, "q")?.0)?.value;
        Ok(())
    })
}

/// Minimum (`use_max == 0`) or maximum pairwise distance of `m` points.
///
/// # Safety
/// `points` must hold `m` valid point pointers.
#[no_mangle]
pub unsafe extern "C" fn mequi_dm(
    system: *const MequiSystem,
    points: *const *const MequiPoint,
    m: usize,
    use_max: i32,
    out_value: *mut f64,
) -> MequiStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let sys = &handle(system, "system")?.0;
        let t = tuple(sys, points, m)?;
        *slot = if use_max != 0 { dm_max(sys, &t)? } else { dm_min(sys, &t)? };
        Ok(())
    })
}

/// Windowed estimate of the Besicovitch m-distance at `horizon`.
/// `out_converged` may be null.
///
/// # Safety
/// `points` must hold `m` valid point pointers.
#[no_mangle]
pub unsafe extern "C" fn mequi_besicovitch(
    system: *const MequiSystem,
    points: *const *const MequiPoint,
    m: usize,
    horizon: usize,
    out_value: *mut f64,
    out_converged: *mut i32,
) -> MequiStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let sys = &handle(system, "system")?.0;
        let e = besicovitch_estimate(sys, &tuple(sys, points, m)?, horizon)?;
        *slot = e.value;
        if let Some(c) = out_converged.as_mut() {
            *c = i32::from(e.converged);
        }
        Ok(())
    })
}

/// Writes the first `depth` odometer digits of `point` (least significant first) into `digits`.
///
/// # Safety
/// `digits` must hold `depth` bytes.
#[no_mangle]
pub unsafe extern "C" fn mequi_address(
    system: *const MequiSystem,
    point: *const MequiPoint,
    depth: usize,
    digits: *mut u8,
) -> MequiStatus {
    guard(|| {
        if digits.is_null() && depth > 0 {
            return Err(null("digits"));
        }
        let sys = &handle(system, "system")?.0;
        let a = address(sys, &handle(point, "point")?.0, depth)?;
        std::ptr::copy_nonoverlapping(a.digits().as_ptr(), digits, depth);
        Ok(())
    })
}

/// Most common fibre cardinality over `samples` random depth-`depth` addresses,
/// with the fraction of samples attaining it. `out_fraction` may be null.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mequi_multiplicity(
    system: *const MequiSystem,
    depth: usize,
    word_radius: usize,
    samples: usize,
    seed: u64,
    out_mode: *mut usize,
    out_fraction: *mut f64,
) -> MequiStatus {
    guard(|| {
        let slot = out(out_mode, "out_mode")?;
        let sys = &handle(system, "system")?.0;
        let mu = multiplicity_estimate(sys, depth, word_radius, samples, seed)?;
        *slot = mu.mode;
        if let Some(f) = out_fraction.as_mut() {
            *f = mu.fraction(mu.mode);
        }
        Ok(())
    })
}
