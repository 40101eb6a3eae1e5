//! C ABI for the felab simulation library.
//!
//! Conventions:
//! - every fallible function returns a [`FelabStatus`]; results go through
//!   out-pointers, which are only written on success;
//! - on failure, [`felab_last_error_message`] describes the error (per thread);
//! - simulations are opaque [`FelabSim`] handles created by
//!   [`felab_sim_new`] and released with [`felab_sim_free`];
//! - panics never cross the boundary: they are reported as
//!   [`FelabStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use felab::checkpoint;
use felab::dynamics::{Dynamics, SimParams, TrajectoryState};
use felab::error::FelabError;
use felab::forcing::ForcingConfig;
use felab::inequalities::{check_fp_scalar, poincare_constant};
use felab::rng::StreamId;
use felab::spectral::{lp_norm, sobolev_norm, SpectralField};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FelabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGrid = 3,
    Resolution = 4,
    BlowUp = 5,
    KappaBudget = 6,
    Checkpoint = 7,
    Io = 8,
    Panic = 9,
    Other = 10,
}

impl From<&FelabError> for FelabStatus {
    fn from(e: &FelabError) -> Self {
        match e {
            FelabError::InvalidGrid(_) | FelabError::GridMismatch { .. } => FelabStatus::InvalidGrid,
            FelabError::InvalidParameter { .. }
            | FelabError::ModeOutsideGrid(..)
            | FelabError::ZeroAmplitude(..)
            | FelabError::AsymmetricModes(..)
            | FelabError::Config(_)
            | FelabError::NonPositive { .. } => FelabStatus::InvalidArgument,
            FelabError::Resolution(_) => FelabStatus::Resolution,
            FelabError::BlowUp { .. } => FelabStatus::BlowUp,
            FelabError::KappaBudget { .. } => FelabStatus::KappaBudget,
            FelabError::Checkpoint(_) => FelabStatus::Checkpoint,
            FelabError::Io { .. } => FelabStatus::Io,
            _ => FelabStatus::Other,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

enum Failure {
    Status(FelabStatus, String),
    Lib(FelabError),
}

impl From<FelabError> for Failure {
    fn from(e: FelabError) -> Self {
        Failure::Lib(e)
    }
}

fn null() -> Failure {
    Failure::Status(FelabStatus::NullPointer, "null pointer argument".into())
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Status(FelabStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FelabStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FelabStatus::Ok,
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            FelabStatus::from(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            FelabStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null());
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

/// Opaque simulation handle.
pub struct FelabSim {
    dynamics: Dynamics,
    state: TrajectoryState,
}

/// Parameters for [`felab_sim_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FelabSimConfig {
    /// Dissipation power in (0, 2].
    pub gamma: f64,
    /// Grid points per dimension (even, at least 4).
    pub n: usize,
    pub dt: f64,
    pub seed: u64,
    /// Trajectory stream id within the seed.
    pub stream: u64,
    /// Forced modes: all `0 < |k| <= n_force`; 0 disables forcing.
    pub n_force: f64,
    /// `q_k = amplitude |k|^-exponent`.
    pub forcing_exponent: f64,
    pub forcing_amplitude: f64,
    /// Nonzero enables the 2/3 dealiasing rule.
    pub dealias: i32,
}

/// Fills `out` with defaults: gamma 1, n 64, dt 1e-3, ball forcing of radius 4
/// and amplitude 1, dealiasing on.
///
/// # Safety
/// `out` must be null or point to writable memory for one `FelabSimConfig`.
#[no_mangle]
pub unsafe extern "C" fn felab_sim_config_default(out: *mut FelabSimConfig) -> FelabStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(null)?;
        *out = FelabSimConfig {
            gamma: 1.0,
            n: 64,
            dt: 1e-3,
            seed: 0,
            stream: 0,
            n_force: 4.0,
            forcing_exponent: 1.0,
            forcing_amplitude: 1.0,
            dealias: 1,
        };
        Ok(())
    })
}

/// Creates a simulation with zero initial vorticity.
///
/// # Safety
/// `cfg` must point to a valid `FelabSimConfig`; `out` to writable storage
/// for one pointer.
#[no_mangle]
pub unsafe extern "C" fn felab_sim_new(cfg: *const FelabSimConfig, out: *mut *mut FelabSim) -> FelabStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(null)?;
        let out = out.as_mut().ok_or_else(null)?;
        let mut params = SimParams::new(cfg.gamma, cfg.n, cfg.dt, 0.0);
        params.seed = cfg.seed;
        params.dealias = cfg.dealias != 0;
        params.validate()?;
        let forcing = if cfg.n_force > 0.0 {
            ForcingConfig::ball(cfg.n_force, cfg.forcing_exponent, cfg.forcing_amplitude)?
        } else {
            ForcingConfig::none()
        };
        let dynamics = Dynamics::new(&params, &forcing)?;
        let state = TrajectoryState::new(SpectralField::zeros(dynamics.grid()), StreamId::new(cfg.seed, cfg.stream));
        *out = Box::into_raw(Box::new(FelabSim { dynamics, state }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `sim` must be null or a handle from [`felab_sim_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn felab_sim_free(sim: *mut FelabSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Replaces the state by the single real mode `amplitude·sin(k·x)` (or cos if
/// `cosine` is nonzero); time and step counter are kept.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn felab_sim_set_single_mode(
    sim: *mut FelabSim,
    k1: i64,
    k2: i64,
    amplitude: f64,
    cosine: i32,
) -> FelabStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(null)?;
        sim.state.omega = SpectralField::single_mode(sim.dynamics.grid(), (k1, k2), amplitude, cosine != 0)?;
        Ok(())
    })
}

/// Advances the main equation by `steps` time steps.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn felab_sim_step(sim: *mut FelabSim, steps: u64) -> FelabStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(null)?;
        for _ in 0..steps {
            sim.state = sim.dynamics.step_main(&sim.state)?;
        }
        Ok(())
    })
}

/// Current time and step counter.
///
/// # Safety
/// `sim` must be a live handle; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn felab_sim_time(sim: *const FelabSim, t: *mut f64, step: *mut u64) -> FelabStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(null)?;
        if let Some(t) = t.as_mut() {
            *t = sim.state.t;
        }
        if let Some(s) = step.as_mut() {
            *s = sim.state.step;
        }
        Ok(())
    })
}

/// Homogeneous Sobolev norm `‖Λ^s ω‖_{L²}`.
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn felab_sim_sobolev_norm(sim: *const FelabSim, s: f64, out: *mut f64) -> FelabStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(null)?;
        let out = out.as_mut().ok_or_else(null)?;
        *out = sobolev_norm(&sim.state.omega, s);
        Ok(())
    })
}

/// `‖ω‖_{L^p}` by grid quadrature, `p >= 1`.
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn felab_sim_lp_norm(sim: *const FelabSim, p: f64, out: *mut f64) -> FelabStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(null)?;
        let out = out.as_mut().ok_or_else(null)?;
        if !(p >= 1.0) {
            return Err(invalid(format!("p must be >= 1, got {p}")));
        }
        *out = lp_norm(&sim.state.omega, p);
        Ok(())
    })
}

/// Grid size `n`; the state has `n*n` complex coefficients.
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn felab_sim_grid_size(sim: *const FelabSim, out: *mut usize) -> FelabStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(null)?;
        *out.as_mut().ok_or_else(null)? = sim.dynamics.grid().n();
        Ok(())
    })
}

/// Copies the Fourier coefficients as interleaved `(re, im)` pairs in
/// row-major order into `buf`, which must hold `2*n*n` doubles.
///
/// # Safety
/// `sim` must be a live handle; `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn felab_sim_coefficients(sim: *const FelabSim, buf: *mut f64, len: usize) -> FelabStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(null)?;
        if buf.is_null() {
            return Err(null());
        }
        let c = sim.state.omega.coeffs();
        if len < 2 * c.len() {
            return Err(invalid(format!("buffer holds {len} doubles, need {}", 2 * c.len())));
        }
        let out = std::slice::from_raw_parts_mut(buf, 2 * c.len());
        for (i, z) in c.iter().enumerate() {
            out[2 * i] = z.re;
            out[2 * i + 1] = z.im;
        }
        Ok(())
    })
}

/// Writes a binary checkpoint of the current state.
///
/// # Safety
/// `sim` must be a live handle and `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn felab_sim_save_checkpoint(sim: *const FelabSim, path: *const c_char) -> FelabStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(null)?;
        let path = path_arg(path)?;
        let p = sim.dynamics.params();
        checkpoint::save(&path, &sim.state, p.gamma, p.dt)?;
        Ok(())
    })
}

/// Replaces the state by a checkpoint written with the same grid, `γ` and
/// `dt`. Subsequent steps continue the original trajectory exactly.
///
/// # Safety
/// `sim` must be a live handle and `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn felab_sim_load_checkpoint(sim: *mut FelabSim, path: *const c_char) -> FelabStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(null)?;
        let path = path_arg(path)?;
        let (hdr, state) = checkpoint::load(&path, sim.dynamics.grid())?;
        let p = sim.dynamics.params();
        if hdr.gamma.to_bits() != p.gamma.to_bits() || hdr.dt.to_bits() != p.dt.to_bits() {
            return Err(Failure::Status(
                FelabStatus::Checkpoint,
                format!("checkpoint has gamma={}, dt={}; simulation has gamma={}, dt={}", hdr.gamma, hdr.dt, p.gamma, p.dt),
            ));
        }
        sim.state = state;
        Ok(())
    })
}

/// Fractional Poincaré constant in dimension `d`. Pass `p = 0` for the
/// exponent-free constant; otherwise `p` must be an even integer `>= 4`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn felab_poincare_constant(d: u32, gamma: f64, p: f64, out: *mut f64) -> FelabStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(null)?;
        let c = poincare_constant(d, gamma, if p == 0.0 { None } else { Some(p) })?;
        *out = c.value;
        Ok(())
    })
}

/// Evaluates the scalar inequality `f_p(a, b) >= (p-2)(a-b)² a^(p-2)` in
/// exact arithmetic. `holds` receives 1 if it holds (within 1e-12 relative),
/// else 0. Output pointers may be null.
///
/// # Safety
/// Non-null output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn felab_check_fp_scalar(
    a: f64,
    b: f64,
    p: u32,
    lhs: *mut f64,
    rhs: *mut f64,
    holds: *mut i32,
) -> FelabStatus {
    guard(|| {
        let r = check_fp_scalar(a, b, p)?;
        if let Some(x) = lhs.as_mut() {
            *x = r.report.lhs;
        }
        if let Some(x) = rhs.as_mut() {
            *x = r.report.rhs;
        }
        if let Some(x) = holds.as_mut() {
            *x = i32::from(r.report.pass);
        }
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next felab call on the same thread.
#[no_mangle]
pub extern "C" fn felab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn felab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
