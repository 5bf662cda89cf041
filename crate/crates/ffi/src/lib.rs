//! C ABI over the steppable simulation.
//!
//! Every function returns an [`SdgStatus`]; the message of the most recent
//! failure on the calling thread is available from [`sdg_last_error_message`].
//! Handles are opaque and must be released with [`sdg_simulation_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use sdg_ibm::app::config::{parse_key_values, ExperimentConfig};
use sdg_ibm::app::experiment::{RunStatus, Simulation};
use sdg_ibm::app::output::write_run;
use sdg_ibm::SdgError;

/// Result codes of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidParameter = 3,
    InvalidGeometry = 4,
    PointOutsideDomain = 5,
    UnsupportedDegree = 6,
    InvalidEvaluation = 7,
    AssemblyFailure = 8,
    SingularSystem = 9,
    SolveDiverged = 10,
    PostprocessFailure = 11,
    MarkerEscaped = 12,
    Io = 13,
    Usage = 14,
    BufferTooSmall = 15,
    Panic = 16,
}

/// Run state reported by [`sdg_simulation_state`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdgRunState {
    Running = 0,
    Completed = 1,
    BlownUp = 2,
    MarkerEscaped = 3,
    Failed = 4,
}

/// Diagnostics of one step.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdgDiagnostics {
    pub step: usize,
    pub time: f64,
    pub area: f64,
    pub area_change_pct: f64,
    pub energy: f64,
    pub eta: f64,
    pub picard_iters: usize,
    pub picard_converged: bool,
    pub blown_up: bool,
}

/// Opaque simulation handle.
pub struct SdgSimulation {
    inner: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &SdgError) -> SdgStatus {
    match e {
        SdgError::InvalidParameter(_) => SdgStatus::InvalidParameter,
        SdgError::InvalidGeometry(_) => SdgStatus::InvalidGeometry,
        SdgError::PointOutsideDomain { .. } => SdgStatus::PointOutsideDomain,
        SdgError::UnsupportedDegree(_) => SdgStatus::UnsupportedDegree,
        SdgError::InvalidEvaluation(_) => SdgStatus::InvalidEvaluation,
        SdgError::AssemblyFailure(_) => SdgStatus::AssemblyFailure,
        SdgError::SingularSystem(_) => SdgStatus::SingularSystem,
        SdgError::SolveDiverged { .. } => SdgStatus::SolveDiverged,
        SdgError::PostprocessFailure(_) => SdgStatus::PostprocessFailure,
        SdgError::MarkerEscaped { .. } => SdgStatus::MarkerEscaped,
        SdgError::Io(_) => SdgStatus::Io,
        SdgError::Usage(_) => SdgStatus::Usage,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SdgStatus, String)>) -> SdgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SdgStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SdgStatus::Panic
        }
    }
}

fn lift(e: SdgError) -> (SdgStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (SdgStatus, String) {
    (SdgStatus::NullPointer, format!("{name} is null"))
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, (SdgStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (SdgStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn sim_ref<'a>(p: *const SdgSimulation) -> Result<&'a SdgSimulation, (SdgStatus, String)> {
    p.as_ref().ok_or_else(|| null("simulation"))
}

unsafe fn sim_mut<'a>(p: *mut SdgSimulation) -> Result<&'a mut SdgSimulation, (SdgStatus, String)> {
    p.as_mut().ok_or_else(|| null("simulation"))
}

/// Creates a simulation from `key = value` configuration text.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sdg_simulation_new(config: *const c_char, out: *mut *mut SdgSimulation) -> SdgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let text = c_str(config, "config")?;
        let map = parse_key_values(text).map_err(lift)?;
        let cfg = ExperimentConfig::from_map(&map).map_err(lift)?;
        let inner = Simulation::new(cfg).map_err(lift)?;
        *out = Box::into_raw(Box::new(SdgSimulation { inner }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `sim` must come from [`sdg_simulation_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sdg_simulation_free(sim: *mut SdgSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances one step; `running` receives 1 while the run continues.
///
/// # Safety
/// `sim` must be a live handle; `running` may be null.
#[no_mangle]
pub unsafe extern "C" fn sdg_simulation_step(sim: *mut SdgSimulation, running: *mut bool) -> SdgStatus {
    guard(|| {
        let s = sim_mut(sim)?;
        let r = s.inner.step();
        if let Some(p) = running.as_mut() {
            *p = r;
        }
        Ok(())
    })
}

/// Steps until the run terminates.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sdg_simulation_run(sim: *mut SdgSimulation) -> SdgStatus {
    guard(|| {
        sim_mut(sim)?.inner.run_to_end();
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sdg_simulation_state(sim: *const SdgSimulation, out: *mut SdgRunState) -> SdgStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = match s.inner.status() {
            None => SdgRunState::Running,
            Some(RunStatus::Completed) => SdgRunState::Completed,
            Some(RunStatus::BlownUp { .. }) => SdgRunState::BlownUp,
            Some(RunStatus::MarkerEscaped { .. }) => SdgRunState::MarkerEscaped,
            Some(RunStatus::Failed { .. }) => SdgRunState::Failed,
        };
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sdg_simulation_num_markers(sim: *const SdgSimulation, out: *mut usize) -> SdgStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        *out.as_mut().ok_or_else(|| null("out"))? = s.inner.markers().num_markers();
        Ok(())
    })
}

/// Copies marker positions as `x₀, y₀, x₁, y₁, …` into `xy` of length `len`.
///
/// # Safety
/// `sim` must be a live handle and `xy` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sdg_simulation_markers(sim: *const SdgSimulation, xy: *mut f64, len: usize) -> SdgStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        if xy.is_null() {
            return Err(null("xy"));
        }
        let x = &s.inner.markers().x;
        if len < 2 * x.len() {
            return Err((SdgStatus::BufferTooSmall, format!("need {} doubles, got {len}", 2 * x.len())));
        }
        let buf = std::slice::from_raw_parts_mut(xy, 2 * x.len());
        for (chunk, p) in buf.chunks_exact_mut(2).zip(x) {
            chunk[0] = p.x;
            chunk[1] = p.y;
        }
        Ok(())
    })
}

/// Diagnostics of the latest recorded step.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sdg_simulation_diagnostics(sim: *const SdgSimulation, out: *mut SdgDiagnostics) -> SdgStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = s.inner.records().last().expect("step 0 is always recorded");
        *out = SdgDiagnostics {
            step: r.step,
            time: r.time,
            area: r.area,
            area_change_pct: r.area_change_pct,
            energy: r.energy,
            eta: r.eta,
            picard_iters: r.picard_iters,
            picard_converged: r.picard_converged,
            blown_up: r.blown_up,
        };
        Ok(())
    })
}

/// Writes `area_history.csv`, marker snapshots and `run.meta` into `dir`.
///
/// # Safety
/// `sim` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sdg_simulation_write_output(sim: *const SdgSimulation, dir: *const c_char) -> SdgStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        let dir = c_str(dir, "dir")?;
        write_run(&s.inner.record(), Path::new(dir)).map_err(lift)?;
        Ok(())
    })
}

/// Copies the last error message of this thread, NUL-terminated and truncated
/// to `len` bytes; returns the full message length.
///
/// # Safety
/// `buf` must be valid for `len` writes or null.
#[no_mangle]
pub unsafe extern "C" fn sdg_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sdg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
