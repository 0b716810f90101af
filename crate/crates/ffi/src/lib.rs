//! C ABI for zoll-lab.
//!
//! Every function returns a [`ZollStatus`]; on failure the message is kept
//! per thread and read back with [`zoll_last_error_message`]. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use nalgebra::{DMatrix, DVector};
use zoll_lab::dynamics::{integrate, TangentState};
use zoll_lab::geometry::{builtin, khat, ChartManifold, ChartPoint};
use zoll_lab::periods::{default_window, detect_period, PeriodOptions};
use zoll_lab::scenarios::{load_config, resolve, run_scenario, Overrides, ScenarioConfig};
use zoll_lab::spectral::{build_spectral, classify_linear_flow, LinearFlowClass, SpectralData};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZollStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Config = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZollFlowClass {
    Zoll = 0,
    Besse = 1,
    NotBesse = 2,
    Undecided = 3,
}

/// Result of [`zoll_detect_period`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZollPeriod {
    pub period: f64,
    pub defect: f64,
    /// 1 when the orbit closed, 0 for the best non-closing candidate.
    pub closed: i32,
}

/// Opaque manifold handle.
pub struct ZollManifold(ChartManifold);

/// Opaque spectral-data handle.
pub struct ZollSpectral(SpectralData);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: ZollStatus, msg: impl Into<String>) -> ZollStatus {
    set_error(msg);
    status
}

fn from_core(e: zoll_lab::Error) -> ZollStatus {
    use zoll_lab::Error as E;
    let status = match e {
        E::InvalidArgument(_) | E::Normalization { .. } | E::UnknownChart(_) | E::MissingStructure { .. } => {
            ZollStatus::InvalidArgument
        }
        _ => ZollStatus::Numerical,
    };
    fail(status, e.to_string())
}

/// Runs `f`, converting panics into [`ZollStatus::Panic`].
fn guard(f: impl FnOnce() -> ZollStatus) -> ZollStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == ZollStatus::Ok {
                set_error("");
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(ZollStatus::Panic, msg)
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, ZollStatus> {
    if p.is_null() {
        return Err(fail(ZollStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(ZollStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], ZollStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(ZollStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

macro_rules! try_ffi {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Copies the calling thread's last error message, NUL-terminated, into
/// `buf` (truncating) and returns the full length without the terminator.
///
/// # Safety
/// `buf` must be null or valid for `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn zoll_last_error_message(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && capacity > 0 {
            let n = msg.len().min(capacity - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn zoll_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a registered manifold. `keys`/`values` hold `n_params` parameter
/// overrides and may be null when `n_params == 0`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `keys` must point to `n_params`
/// such strings and `values` to `n_params` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zoll_manifold_new(
    name: *const c_char,
    keys: *const *const c_char,
    values: *const f64,
    n_params: usize,
    out: *mut *mut ZollManifold,
) -> ZollStatus {
    guard(|| {
        if out.is_null() {
            return fail(ZollStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let name = try_ffi!(c_str(name, "name"));
        let mut params = BTreeMap::new();
        if n_params > 0 {
            if keys.is_null() {
                return fail(ZollStatus::NullPointer, "keys is null");
            }
            let vals = try_ffi!(slice(values, n_params, "values"));
            for (i, v) in vals.iter().enumerate() {
                let k = try_ffi!(c_str(*keys.add(i), "parameter key"));
                params.insert(k.to_string(), *v);
            }
        }
        match builtin(name, &params) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(ZollManifold(m)));
                ZollStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Releases a manifold handle; null is ignored.
///
/// # Safety
/// `m` must come from [`zoll_manifold_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn zoll_manifold_free(m: *mut ZollManifold) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zoll_manifold_dim(m: *const ZollManifold, out: *mut usize) -> ZollStatus {
    guard(|| {
        if m.is_null() || out.is_null() {
            return fail(ZollStatus::NullPointer, "null argument");
        }
        *out = (*m).0.dim;
        ZollStatus::Ok
    })
}

unsafe fn point<'a>(
    m: *const ZollManifold,
    q: *const f64,
    v: *const f64,
    dim: usize,
) -> Result<(&'a ChartManifold, &'a [f64], &'a [f64]), ZollStatus> {
    if m.is_null() {
        return Err(fail(ZollStatus::NullPointer, "manifold is null"));
    }
    let m = &(*m).0;
    if dim != m.dim {
        return Err(fail(ZollStatus::InvalidArgument, format!("dim {dim} does not match manifold dimension {}", m.dim)));
    }
    Ok((m, slice(q, dim, "q")?, slice(v, dim, "v")?))
}

/// `K̂` at the unit vector `v` over `q` in `chart`.
///
/// # Safety
/// `q` and `v` must hold `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zoll_khat(
    m: *const ZollManifold,
    chart: usize,
    q: *const f64,
    v: *const f64,
    dim: usize,
    out: *mut f64,
) -> ZollStatus {
    guard(|| {
        let (m, q, v) = try_ffi!(point(m, q, v, dim));
        if out.is_null() {
            return fail(ZollStatus::NullPointer, "out is null");
        }
        match khat(m, &ChartPoint::new(chart, q.to_vec()), &DVector::from_row_slice(v)) {
            Ok(s) => {
                *out = s.khat;
                ZollStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Closure period of the orbit through `(q, v)` searched in
/// `(0.5, 1.5)·t_guess`.
///
/// # Safety
/// `q` and `v` must hold `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zoll_detect_period(
    m: *const ZollManifold,
    chart: usize,
    q: *const f64,
    v: *const f64,
    dim: usize,
    t_guess: f64,
    tol: f64,
    out: *mut ZollPeriod,
) -> ZollStatus {
    guard(|| {
        let (m, q, v) = try_ffi!(point(m, q, v, dim));
        if out.is_null() {
            return fail(ZollStatus::NullPointer, "out is null");
        }
        let state = match TangentState::new(m, ChartPoint::new(chart, q.to_vec()), DVector::from_row_slice(v)) {
            Ok(s) => s,
            Err(e) => return from_core(e),
        };
        let opts = PeriodOptions { integrator_tol: tol, ..PeriodOptions::default() };
        match detect_period(m, &state, t_guess, default_window(t_guess), &opts) {
            Ok(est) => {
                *out = ZollPeriod { period: est.period, defect: est.defect, closed: est.closed as i32 };
                ZollStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Integrates the magnetic flow to `t_end`. Writes the final `(q, v)` into
/// `y_out` (`2·dim` doubles), its chart into `chart_out` and the maximum
/// relative energy drift into `drift_out` (each output may be null).
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn zoll_integrate(
    m: *const ZollManifold,
    chart: usize,
    q: *const f64,
    v: *const f64,
    dim: usize,
    t_end: f64,
    tol: f64,
    y_out: *mut f64,
    chart_out: *mut usize,
    drift_out: *mut f64,
) -> ZollStatus {
    guard(|| {
        let (m, q, v) = try_ffi!(point(m, q, v, dim));
        let state = match TangentState::new(m, ChartPoint::new(chart, q.to_vec()), DVector::from_row_slice(v)) {
            Ok(s) => s,
            Err(e) => return from_core(e),
        };
        let traj = match integrate(m, &state, t_end, tol) {
            Ok(t) => t,
            Err(e) => return from_core(e),
        };
        let last = traj.last();
        if !y_out.is_null() {
            ptr::copy_nonoverlapping(last.y.as_ptr(), y_out, 2 * dim);
        }
        if !chart_out.is_null() {
            *chart_out = last.chart;
        }
        if !drift_out.is_null() {
            *drift_out = traj.stats.max_invariant_drift;
        }
        ZollStatus::Ok
    })
}

/// Builds spectral data from row-major `dim × dim` matrices.
///
/// # Safety
/// `rho` and `gamma` must hold `dim²` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zoll_spectral_new(
    rho: *const f64,
    gamma: *const f64,
    dim: usize,
    out: *mut *mut ZollSpectral,
) -> ZollStatus {
    guard(|| {
        if out.is_null() {
            return fail(ZollStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        if dim == 0 {
            return fail(ZollStatus::InvalidArgument, "dim must be positive");
        }
        let r = try_ffi!(slice(rho, dim * dim, "rho"));
        let g = try_ffi!(slice(gamma, dim * dim, "gamma"));
        match build_spectral(&DMatrix::from_row_slice(dim, dim, r), &DMatrix::from_row_slice(dim, dim, g)) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(ZollSpectral(s)));
                ZollStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `s` must come from [`zoll_spectral_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn zoll_spectral_free(s: *mut ZollSpectral) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Writes the `k` spectral numbers (descending) into `out`. `len_out`
/// always receives `k`; a short buffer gives [`ZollStatus::BufferTooSmall`].
///
/// # Safety
/// `out` must be valid for `capacity` doubles; `len_out` writable.
#[no_mangle]
pub unsafe extern "C" fn zoll_spectral_numbers(
    s: *const ZollSpectral,
    out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> ZollStatus {
    guard(|| {
        if s.is_null() || len_out.is_null() {
            return fail(ZollStatus::NullPointer, "null argument");
        }
        let nums = &(*s).0.spectral;
        *len_out = nums.len();
        if capacity < nums.len() || out.is_null() {
            return fail(ZollStatus::BufferTooSmall, format!("need {} doubles", nums.len()));
        }
        ptr::copy_nonoverlapping(nums.as_ptr(), out, nums.len());
        ZollStatus::Ok
    })
}

/// Classifies `e^{tÃ}` with denominators up to `denom_bound`. The common
/// period (`2π` for Zoll, NaN otherwise) goes to `period_out` if non-null.
///
/// # Safety
/// `class_out` must be writable; `period_out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn zoll_spectral_classify(
    s: *const ZollSpectral,
    denom_bound: u64,
    class_out: *mut ZollFlowClass,
    period_out: *mut f64,
) -> ZollStatus {
    guard(|| {
        if s.is_null() || class_out.is_null() {
            return fail(ZollStatus::NullPointer, "null argument");
        }
        if denom_bound == 0 {
            return fail(ZollStatus::InvalidArgument, "denom_bound must be positive");
        }
        let (class, period) = match classify_linear_flow(&(*s).0, denom_bound) {
            LinearFlowClass::Zoll => (ZollFlowClass::Zoll, std::f64::consts::TAU),
            LinearFlowClass::Besse { common_period } => (ZollFlowClass::Besse, common_period),
            LinearFlowClass::NotBesse => (ZollFlowClass::NotBesse, f64::NAN),
            LinearFlowClass::Undecided => (ZollFlowClass::Undecided, f64::NAN),
        };
        *class_out = class;
        if !period_out.is_null() {
            *period_out = period;
        }
        ZollStatus::Ok
    })
}

/// Runs a scenario as the CLI would. `config_path` and `out_dir` may be
/// null. `exit_code_out` receives the CLI exit code (0 all rules passed,
/// 1 some rule failed).
///
/// # Safety
/// String arguments must be NUL-terminated or null; `exit_code_out` writable.
#[no_mangle]
pub unsafe extern "C" fn zoll_run_scenario(
    scenario: *const c_char,
    config_path: *const c_char,
    out_dir: *const c_char,
    exit_code_out: *mut i32,
) -> ZollStatus {
    guard(|| {
        if exit_code_out.is_null() {
            return fail(ZollStatus::NullPointer, "exit_code_out is null");
        }
        let scenario = try_ffi!(c_str(scenario, "scenario"));
        let cfg = if config_path.is_null() {
            ScenarioConfig::default()
        } else {
            let p = try_ffi!(c_str(config_path, "config_path"));
            match load_config(p.as_ref()) {
                Ok(c) => c,
                Err(e) => return fail(ZollStatus::Config, e.0),
            }
        };
        let out = if out_dir.is_null() { None } else { Some(PathBuf::from(try_ffi!(c_str(out_dir, "out_dir")))) };
        let resolved = match resolve(scenario, &cfg, &Overrides { out, ..Overrides::default() }) {
            Ok(r) => r,
            Err(e) => return fail(ZollStatus::Config, e.0),
        };
        match run_scenario(&resolved) {
            Ok(o) => {
                *exit_code_out = o.exit_code;
                ZollStatus::Ok
            }
            Err(e) => {
                *exit_code_out = e.exit_code();
                let status = match e {
                    zoll_lab::scenarios::RunError::Config(_) => ZollStatus::Config,
                    _ => ZollStatus::Numerical,
                };
                fail(status, e.to_string())
            }
        }
    })
}
