//! C ABI over `cascade-sim`.
//!
//! Parameters live behind an opaque `CascadeParams` handle created with
//! `cascade_params_new` and released with `cascade_params_free`. Every
//! other function returns a `CascadeStatus`; on failure a message is
//! available from `cascade_last_error_message` on the same thread.
//! A switch-off time of NaN means the lasers are never switched off.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cascade_sim::analytic::{evolve_protocol, find_tbar, AmplitudeState, Schedule};
use cascade_sim::detection::{channel_probabilities, concurrence_conditional, simulate_records_on};
use cascade_sim::dynamics::Grid;
use cascade_sim::{Error, SubsystemParams, SystemParams};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CascadeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    InvalidTime = 3,
    InvalidEfficiency = 4,
    InvalidGrid = 5,
    ZeroProbability = 6,
    EmptyEnsemble = 7,
    Internal = 8,
    Panic = 9,
}

/// Opaque validated parameter set.
pub struct CascadeParams {
    inner: SystemParams,
}

/// Raw parameters of one atom-cavity subsystem, in units of 𝒦.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeSubsystem {
    pub g: f64,
    pub omega_rabi: f64,
    pub detuning: f64,
    pub kappa: f64,
    pub kappa_loss: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
}

/// No-jump amplitudes α, β, γ, δ split into real and imaginary parts.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CascadeAmplitudes {
    pub t: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub beta_re: f64,
    pub beta_im: f64,
    pub gamma_re: f64,
    pub gamma_im: f64,
    pub delta_re: f64,
    pub delta_im: f64,
    pub p_no: f64,
    pub concurrence_atoms: f64,
    pub concurrence_cavities: f64,
    pub laser_on: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CascadeChannelProbabilities {
    pub t: f64,
    pub p_no: f64,
    pub p_rad: f64,
    pub p_abs: f64,
    pub p_yes: f64,
    pub eta: f64,
    pub p0: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CascadeRecordCounts {
    pub n: u64,
    pub no_jump: u64,
    pub clicked: u64,
    pub reflected: u64,
    pub lost: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> CascadeStatus {
    match err {
        Error::NonPositiveDetuning { .. }
        | Error::NegativeRate { .. }
        | Error::NonFinite { .. }
        | Error::ZeroBandwidth(_) => CascadeStatus::InvalidParameter,
        Error::NegativeTime(_)
        | Error::InvalidSwitchOff(_)
        | Error::TimeBeforeSwitchOff { .. }
        | Error::EmptyWindow { .. } => CascadeStatus::InvalidTime,
        Error::InvalidEfficiency(_) => CascadeStatus::InvalidEfficiency,
        Error::InvalidGrid { .. } | Error::StepTooLarge { .. } => CascadeStatus::InvalidGrid,
        Error::ZeroSurvivalProbability | Error::ZeroNullClickProbability => CascadeStatus::ZeroProbability,
        Error::EmptyEnsemble => CascadeStatus::EmptyEnsemble,
        Error::NotADensityMatrix(_) => CascadeStatus::Internal,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), CascadeStatusError>) -> CascadeStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CascadeStatus::Ok,
        Ok(Err(CascadeStatusError::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            CascadeStatus::NullPointer
        }
        Ok(Err(CascadeStatusError::Sim(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            CascadeStatus::Panic
        }
    }
}

enum CascadeStatusError {
    Null(&'static str),
    Sim(Error),
}

impl From<Error> for CascadeStatusError {
    fn from(e: Error) -> Self {
        Self::Sim(e)
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, CascadeStatusError> {
    p.as_ref().ok_or(CascadeStatusError::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, CascadeStatusError> {
    p.as_mut().ok_or(CascadeStatusError::Null(what))
}

fn schedule(tbar: f64) -> Result<Schedule, Error> {
    if tbar.is_nan() {
        Ok(Schedule::always_on())
    } else {
        Schedule::switch_off_at(tbar)
    }
}

fn to_sub(s: &CascadeSubsystem) -> SubsystemParams {
    SubsystemParams::new(s.g, s.omega_rabi, s.detuning, s.kappa, s.kappa_loss)
        .with_spontaneous_emission(s.gamma, s.gamma_prime)
}

impl From<&AmplitudeState> for CascadeAmplitudes {
    fn from(s: &AmplitudeState) -> Self {
        Self {
            t: s.t,
            alpha_re: s.alpha.re,
            alpha_im: s.alpha.im,
            beta_re: s.beta.re,
            beta_im: s.beta.im,
            gamma_re: s.gamma.re,
            gamma_im: s.gamma.im,
            delta_re: s.delta.re,
            delta_im: s.delta.im,
            p_no: s.p_no(),
            concurrence_atoms: cascade_sim::entanglement::concurrence_atoms_closed(s),
            concurrence_cavities: cascade_sim::entanglement::concurrence_cavities_closed(s),
            laser_on: s.laser_on,
        }
    }
}

/// Validates the parameters and stores a new handle in `*out_params`.
///
/// # Safety
/// `a` and `b` must point to valid `CascadeSubsystem` values and
/// `out_params` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cascade_params_new(
    a: *const CascadeSubsystem,
    b: *const CascadeSubsystem,
    phi: f64,
    out_params: *mut *mut CascadeParams,
) -> CascadeStatus {
    guard(|| {
        let a = deref(a, "a")?;
        let b = deref(b, "b")?;
        let slot = out(out_params, "out_params")?;
        let inner = SystemParams::new(to_sub(a), to_sub(b), phi)?;
        *slot = Box::into_raw(Box::new(CascadeParams { inner }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `params` must come from `cascade_params_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cascade_params_free(params: *mut CascadeParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Amplitudes at time `t` under switch-off at `tbar` (NaN: never).
///
/// # Safety
/// `params` must be a live handle and `out_amplitudes` writable.
#[no_mangle]
pub unsafe extern "C" fn cascade_evolve(
    params: *const CascadeParams,
    tbar: f64,
    t: f64,
    out_amplitudes: *mut CascadeAmplitudes,
) -> CascadeStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let slot = out(out_amplitudes, "out_amplitudes")?;
        let s = evolve_protocol(&p.inner, schedule(tbar)?, t)?;
        *slot = CascadeAmplitudes::from(&s);
        Ok(())
    })
}

/// Switch-off time in [`t_lo`, `t_hi`] maximizing the atom-atom
/// concurrence.
///
/// # Safety
/// `params` must be a live handle and `out_tbar` writable.
#[no_mangle]
pub unsafe extern "C" fn cascade_find_tbar(
    params: *const CascadeParams,
    t_lo: f64,
    t_hi: f64,
    out_tbar: *mut f64,
) -> CascadeStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let slot = out(out_tbar, "out_tbar")?;
        *slot = find_tbar(&p.inner, t_lo, t_hi)?;
        Ok(())
    })
}

/// p_no, p_rad, p_abs and the null-click probability at `t`.
///
/// # Safety
/// `params` must be a live handle and `out_probabilities` writable.
#[no_mangle]
pub unsafe extern "C" fn cascade_channel_probabilities(
    params: *const CascadeParams,
    tbar: f64,
    t: f64,
    eta: f64,
    out_probabilities: *mut CascadeChannelProbabilities,
) -> CascadeStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let slot = out(out_probabilities, "out_probabilities")?;
        let c = channel_probabilities(&p.inner, schedule(tbar)?, t, eta)?;
        *slot = CascadeChannelProbabilities {
            t: c.t,
            p_no: c.p_no,
            p_rad: c.p_rad,
            p_abs: c.p_abs,
            p_yes: c.p_yes,
            eta: c.eta,
            p0: c.p0,
        };
        Ok(())
    })
}

/// Atom-atom concurrence at `t` given that a detector of efficiency `eta`
/// has not clicked.
///
/// # Safety
/// `params` must be a live handle and `out_concurrence` writable.
#[no_mangle]
pub unsafe extern "C" fn cascade_conditional_concurrence(
    params: *const CascadeParams,
    tbar: f64,
    t: f64,
    eta: f64,
    out_concurrence: *mut f64,
) -> CascadeStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let slot = out(out_concurrence, "out_concurrence")?;
        let sched = schedule(tbar)?;
        let probs = channel_probabilities(&p.inner, sched, t, eta)?;
        let state = evolve_protocol(&p.inner, sched, t)?;
        *slot = concurrence_conditional(&state, &probs)?;
        Ok(())
    })
}

/// Monte-Carlo detection records of `n` trajectories up to `t_max`.
///
/// # Safety
/// `params` must be a live handle and `out_counts` writable.
#[no_mangle]
pub unsafe extern "C" fn cascade_simulate_records(
    params: *const CascadeParams,
    tbar: f64,
    eta: f64,
    n: u64,
    seed: u64,
    t_max: f64,
    dt: f64,
    out_counts: *mut CascadeRecordCounts,
) -> CascadeStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let slot = out(out_counts, "out_counts")?;
        let grid = Grid::new(t_max, dt)?;
        let r = simulate_records_on(&p.inner, schedule(tbar)?, grid, eta, n as usize, seed)?;
        *slot = CascadeRecordCounts {
            n: r.n as u64,
            no_jump: r.no_jump as u64,
            clicked: r.clicked as u64,
            reflected: r.reflected as u64,
            lost: r.lost as u64,
        };
        Ok(())
    })
}

/// Message of the last failed call on this thread, or NULL. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cascade_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cascade_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
