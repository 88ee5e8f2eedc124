//! C ABI over `p2dyn`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` or
//! `*_parse` functions and released by the matching `*_free`. Every fallible
//! call returns a [`P2Status`]; the message of the last failure on the
//! calling thread is available from [`p2dyn_last_error`].
//!
//! Points are passed as six doubles `re z, im z, re w, im w, re t, im t`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use p2dyn::ergodic_sampler::{lyapunov_exponents, sample_equilibrium, MeasureSample};
use p2dyn::green_potential::GreenEvaluator;
use p2dyn::map_zoo::{parse_map, MapFamily};
use p2dyn::preimage_solver::PreimageSolver;
use p2dyn::verify::{run_verify, ExperimentConfig, VerifyReport};
use p2dyn::{Error, HomogeneousMap, HomogeneousPoint, C64};

/// Result of every fallible call. `P2_STATUS_OK` is zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum P2Status {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Panic = 3,
    OutOfRange = 4,
    DegenerateMap = 10,
    InvalidMap = 11,
    CriticalPoint = 12,
    SolverFailure = 13,
    Domain = 14,
    Resolution = 15,
    InsufficientSample = 16,
    IllConditionedFrame = 17,
    NegativeMass = 18,
    Parse = 19,
    Config = 20,
    Usage = 21,
    InvalidArgument = 22,
    Io = 23,
}

impl From<&Error> for P2Status {
    fn from(e: &Error) -> Self {
        match e {
            Error::DegenerateEvaluation | Error::DegenerateMap(_) => Self::DegenerateMap,
            Error::InvalidMap(_) | Error::DegreeMismatch(..) => Self::InvalidMap,
            Error::CriticalPoint(_) => Self::CriticalPoint,
            Error::SolverIncomplete(_) | Error::RotationRequired | Error::WalkerFailures(_) => Self::SolverFailure,
            Error::Domain(_) => Self::Domain,
            Error::Resolution(_) => Self::Resolution,
            Error::InsufficientSample(_) => Self::InsufficientSample,
            Error::IllConditionedFrame(_) => Self::IllConditionedFrame,
            Error::NegativeMass(_) => Self::NegativeMass,
            Error::Parse { .. } => Self::Parse,
            Error::Config(_) => Self::Config,
            Error::Usage(_) => Self::Usage,
            Error::InvalidArgument(_) => Self::InvalidArgument,
            Error::Io(_) => Self::Io,
        }
    }
}

/// Opaque map handle.
pub struct P2Map(HomogeneousMap);

/// Opaque sample handle.
pub struct P2Sample(MeasureSample);

/// Opaque experiment configuration.
pub struct P2Config(ExperimentConfig);

/// Opaque verify report; owns its serialised forms.
pub struct P2Report {
    report: VerifyReport,
    json: CString,
    csv: CString,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct P2Exponents {
    pub lambda1: f64,
    pub lambda2: f64,
    pub stderr1: f64,
    pub stderr2: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (P2Status, String)>) -> P2Status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => P2Status::Ok,
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("panic inside p2dyn");
            P2Status::Panic
        }
    }
}

fn lib<T>(r: p2dyn::Result<T>) -> Result<T, (P2Status, String)> {
    r.map_err(|e| (P2Status::from(&e), e.to_string()))
}

fn null() -> (P2Status, String) {
    (P2Status::NullPointer, "null pointer argument".into())
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, (P2Status, String)> {
    p.as_ref().ok_or_else(null)
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, (P2Status, String)> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s).to_str().map_err(|e| (P2Status::InvalidUtf8, e.to_string()))
}

unsafe fn read_point(xs: *const f64) -> Result<HomogeneousPoint, (P2Status, String)> {
    if xs.is_null() {
        return Err(null());
    }
    let v = std::slice::from_raw_parts(xs, 6);
    lib(HomogeneousPoint::new([C64::new(v[0], v[1]), C64::new(v[2], v[3]), C64::new(v[4], v[5])]))
}

unsafe fn write_point(p: &HomogeneousPoint, out: *mut f64) -> Result<(), (P2Status, String)> {
    if out.is_null() {
        return Err(null());
    }
    let o = std::slice::from_raw_parts_mut(out, 6);
    for (k, z) in p.coords().iter().enumerate() {
        o[2 * k] = z.re;
        o[2 * k + 1] = z.im;
    }
    Ok(())
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), (P2Status, String)> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

/// Message of the last failed call on this thread; empty if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn p2dyn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Power map `[z^d : w^d : t^d]`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_map_power(degree: u32, out: *mut *mut P2Map) -> P2Status {
    guard(|| put(out, P2Map(lib(MapFamily::power(degree))?.map)))
}

/// Suspension of the degree-2 Lattès map.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_map_lattes_suspension(out: *mut *mut P2Map) -> P2Status {
    guard(|| put(out, P2Map(lib(MapFamily::lattes_suspension())?.map)))
}

/// Map from the plain-text coefficient format.
///
/// # Safety
/// `text` must be a nul-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_map_parse(text: *const c_char, out: *mut *mut P2Map) -> P2Status {
    guard(|| put(out, P2Map(lib(parse_map(read_str(text)?))?)))
}

/// # Safety
/// `map` must come from a `p2dyn_map_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_map_free(map: *mut P2Map) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Degree of `map`, or 0 for a null handle.
///
/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_map_degree(map: *const P2Map) -> u32 {
    map.as_ref().map(|m| m.0.degree()).unwrap_or(0)
}

/// Image of a point, normalised to unit sup norm.
///
/// # Safety
/// `map` must be live; `point` and `out` must each hold 6 doubles.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_map_evaluate(map: *const P2Map, point: *const f64, out: *mut f64) -> P2Status {
    guard(|| {
        let m = deref(map)?;
        let y = lib(m.0.evaluate(&read_point(point)?))?;
        write_point(&y, out)
    })
}

/// Green function `G_N` of `map` at the lift given by `point` itself, with
/// the truncation bound for `N = depth`.
///
/// # Safety
/// `map` must be live; `point` must hold 6 doubles; `value` and `bound`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_green_value(
    map: *const P2Map,
    depth: usize,
    point: *const f64,
    value: *mut f64,
    bound: *mut f64,
) -> P2Status {
    guard(|| {
        let m = deref(map)?;
        if value.is_null() || bound.is_null() {
            return Err(null());
        }
        if point.is_null() {
            return Err(null());
        }
        let v = std::slice::from_raw_parts(point, 6);
        let lift = [C64::new(v[0], v[1]), C64::new(v[2], v[3]), C64::new(v[4], v[5])];
        let ev = lib(GreenEvaluator::new(&m.0, depth))?;
        *value = ev.lifted(&lift);
        *bound = ev.bound(depth);
        Ok(())
    })
}

/// Backward-iteration sample of the equilibrium measure.
///
/// # Safety
/// `map` must be live and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_sample_new(
    map: *const P2Map,
    depth: usize,
    count: usize,
    seed: u64,
    out: *mut *mut P2Sample,
) -> P2Status {
    guard(|| {
        let m = deref(map)?;
        let solver = lib(PreimageSolver::new(&m.0))?;
        put(out, P2Sample(lib(sample_equilibrium(&solver, depth, count, seed))?))
    })
}

/// # Safety
/// `sample` must come from [`p2dyn_sample_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_sample_free(sample: *mut P2Sample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `sample` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_sample_len(sample: *const P2Sample) -> usize {
    sample.as_ref().map(|s| s.0.points.len()).unwrap_or(0)
}

/// Point `index` of the sample.
///
/// # Safety
/// `sample` must be live and `out` must hold 6 doubles.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_sample_point(sample: *const P2Sample, index: usize, out: *mut f64) -> P2Status {
    guard(|| {
        let s = deref(sample)?;
        let p = s.0.points.get(index).ok_or_else(|| (P2Status::OutOfRange, format!("index {index} out of range")))?;
        write_point(p, out)
    })
}

/// Lyapunov exponents from `walkers` walkers of `iterations` steps.
///
/// # Safety
/// `map` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_lyapunov(
    map: *const P2Map,
    walkers: usize,
    iterations: usize,
    seed: u64,
    out: *mut P2Exponents,
) -> P2Status {
    guard(|| {
        let m = deref(map)?;
        if out.is_null() {
            return Err(null());
        }
        let solver = lib(PreimageSolver::new(&m.0))?;
        let sample = lib(sample_equilibrium(&solver, 25, walkers, seed))?;
        let e = lib(lyapunov_exponents(&solver, &sample, iterations, seed))?;
        *out = P2Exponents { lambda1: e.lambda1, lambda2: e.lambda2, stderr1: e.stderr1, stderr2: e.stderr2 };
        Ok(())
    })
}

/// Experiment configuration from `key=value` text. A nonnegative
/// `seed_override` replaces the seed line.
///
/// # Safety
/// `text` must be nul-terminated and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_config_parse(text: *const c_char, seed_override: i64, out: *mut *mut P2Config) -> P2Status {
    guard(|| {
        let seed = u64::try_from(seed_override).ok();
        put(out, P2Config(lib(ExperimentConfig::parse(read_str(text)?, seed))?))
    })
}

/// # Safety
/// `config` must come from [`p2dyn_config_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_config_free(config: *mut P2Config) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Full verification run.
///
/// # Safety
/// `config` must be live and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_verify(config: *const P2Config, out: *mut *mut P2Report) -> P2Status {
    guard(|| {
        let c = deref(config)?;
        let report = lib(run_verify(&c.0))?;
        let json = CString::new(report.to_json()).map_err(|e| (P2Status::InvalidUtf8, e.to_string()))?;
        let csv = CString::new(report.to_csv()).map_err(|e| (P2Status::InvalidUtf8, e.to_string()))?;
        put(out, P2Report { report, json, csv })
    })
}

/// # Safety
/// `report` must come from [`p2dyn_verify`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_report_free(report: *mut P2Report) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Exit code of the run: 0, 1 (a fail) or 3 (inconclusive only); −1 for null.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_report_exit_code(report: *const P2Report) -> i32 {
    report.as_ref().map(|r| r.report.exit_code()).unwrap_or(-1)
}

/// JSON report, owned by the handle; null for a null handle.
///
/// # Safety
/// `report` must be null or a live handle; the string dies with it.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_report_json(report: *const P2Report) -> *const c_char {
    report.as_ref().map(|r| r.json.as_ptr()).unwrap_or(ptr::null())
}

/// CSV report, owned by the handle; null for a null handle.
///
/// # Safety
/// `report` must be null or a live handle; the string dies with it.
#[no_mangle]
pub unsafe extern "C" fn p2dyn_report_csv(report: *const P2Report) -> *const c_char {
    report.as_ref().map(|r| r.csv.as_ptr()).unwrap_or(ptr::null())
}
