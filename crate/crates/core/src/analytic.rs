//! Closed-form no-jump amplitudes of the cascaded pair.
//!
//! The unnormalized no-jump state is α|a⟩ + β|b⟩ + γ|c⟩ + δ|d⟩ with
//! |a⟩ = atom A excited, |b⟩ = photon in cavity A, |c⟩ = atom B excited,
//! |d⟩ = photon in cavity B. Starting from |a⟩ the pair (α, β) evolves on
//! its own and drives (γ, δ) through the cascade coupling √(κ_aκ_b)e^{iφ}.
//!
//! All exponentials are evaluated in exponent-combined form, i.e. every
//! term is e^{zt} with z an eigenvalue of a dissipative 2×2 block
//! (Re z ≤ 0), so no intermediate overflows for long times.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{exp_divided_difference, exp_divided_differences_confluent, I, SINGULAR_THRESHOLD};
use crate::params::{DerivedParams, SystemParams};

/// Below this value of |Λ_a Λ_b| the 1/(Λ_aΛ_b) prefactor of the γ, δ
/// solutions cancels too many digits; the confluent evaluation is used.
pub const CRITICAL_DAMPING_THRESHOLD: f64 = 1e-4;

/// Grid step of the t̄ scan, in units of 1/𝒦.
pub const TBAR_SCAN_STEP: f64 = 0.01;

/// No-jump amplitudes at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeState {
    pub t: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub delta: Complex64,
    /// Whether the Raman lasers are on at `t`.
    pub laser_on: bool,
}

impl AmplitudeState {
    /// |a⟩ at t = 0.
    pub fn initial() -> Self {
        Self::from_array(0.0, [Complex64::new(1.0, 0.0), 0.0.into(), 0.0.into(), 0.0.into()], true)
    }

    pub fn from_array(t: f64, amps: [Complex64; 4], laser_on: bool) -> Self {
        Self {
            t,
            alpha: amps[0],
            beta: amps[1],
            gamma: amps[2],
            delta: amps[3],
            laser_on,
        }
    }

    pub fn as_array(&self) -> [Complex64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }

    /// Squared norm of the unnormalized state, unclamped.
    pub fn norm_sqr(&self) -> f64 {
        self.as_array().iter().map(|z| z.norm_sqr()).sum()
    }

    /// Probability that no jump has occurred, clamped to [0, 1].
    pub fn p_no(&self) -> f64 {
        self.norm_sqr().clamp(0.0, 1.0)
    }

    /// |ε|² = 1 − p_no, the weight of the collapsed state |e⟩.
    pub fn loss_weight(&self) -> f64 {
        1.0 - self.p_no()
    }

    /// Largest componentwise distance to `other`.
    pub fn max_abs_diff(&self, other: &AmplitudeState) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array().iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

/// Survival probability p_no = |α|² + |β|² + |γ|² + |δ|².
pub fn p_no(state: &AmplitudeState) -> f64 {
    state.p_no()
}

/// When the lasers are switched off, if ever.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Schedule {
    tbar: Option<f64>,
}

impl Schedule {
    /// Lasers stay on for all times.
    pub fn always_on() -> Self {
        Self { tbar: None }
    }

    pub fn switch_off_at(tbar: f64) -> Result<Self> {
        if !tbar.is_finite() || tbar < 0.0 {
            return Err(Error::InvalidSwitchOff(tbar));
        }
        Ok(Self { tbar: Some(tbar) })
    }

    pub fn tbar(&self) -> Option<f64> {
        self.tbar
    }
}

/// Characteristic data of one driven subsystem.
///
/// The 2×2 generator of (atom excited, cavity photon) has eigenvalues
/// `x_plus`, `x_minus` = ±Λ/2 − s with s = (𝒦 + 2iΔ̄)/4 + iΔ′/2.
#[derive(Debug, Clone, Copy)]
struct Modes {
    lambda: Complex64,
    s: Complex64,
    /// (𝒦 + 2iΔ̄)/4 − iΔ′/2, the prefactor appearing in δ(t).
    r: Complex64,
    x_plus: Complex64,
    x_minus: Complex64,
}

impl Modes {
    fn new(d: &DerivedParams) -> Self {
        Self::with_lambda(d, lambda_k(d))
    }

    fn with_lambda(d: &DerivedParams, lambda: Complex64) -> Self {
        let w = Complex64::new(d.big_k, 2.0 * d.stark_cavity);
        let s = w / 4.0 + I * (d.stark_laser / 2.0);
        let r = w / 4.0 - I * (d.stark_laser / 2.0);
        Self {
            lambda,
            s,
            r,
            x_plus: lambda / 2.0 - s,
            x_minus: -lambda / 2.0 - s,
        }
    }
}

fn radicand(d: &DerivedParams) -> Complex64 {
    let w = Complex64::new(d.big_k, 2.0 * d.stark_cavity);
    w * w / 4.0 - 4.0 * d.g_bar * d.g_bar - I * w * d.stark_laser - d.stark_laser * d.stark_laser
}

/// Λ = √((𝒦+2iΔ̄)²/4 − 4ḡ² − i(𝒦+2iΔ̄)Δ′ − Δ′²), principal branch.
pub fn lambda_k(derived: &DerivedParams) -> Complex64 {
    radicand(derived).sqrt()
}

/// Auxiliary quantities of the general closed-form solution, evaluated
/// literally (without exponent combination). Useful for inspection; the
/// helper values may overflow for large `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormIntermediates {
    pub t: f64,
    pub lambda_a: Complex64,
    pub lambda_b: Complex64,
    /// Υ = (𝒦_a − 𝒦_b + 2iΔ̄_a − 2iΔ̄_b)/4.
    pub upsilon: Complex64,
    /// Θ = (Δ′_a − Δ′_b)/2.
    pub theta: f64,
    pub f_plus: Complex64,
    pub f_minus: Complex64,
    pub g_plus: Complex64,
    pub g_minus: Complex64,
    pub h_plus: Complex64,
    pub h_minus: Complex64,
}

fn expm1_ratio(x: Complex64, t: f64) -> Complex64 {
    // (e^{xt} − 1)/x with the limit t below the singular threshold.
    if x.norm() < SINGULAR_THRESHOLD {
        Complex64::new(t, 0.0)
    } else {
        crate::numeric::expm1(x * t) / x
    }
}

pub fn intermediates(params: &SystemParams, t: f64) -> ClosedFormIntermediates {
    let da = params.derived_a();
    let db = params.derived_b();
    let ma = Modes::new(da);
    let mb = Modes::new(db);
    let upsilon = Complex64::new(
        (da.big_k - db.big_k) / 4.0,
        (da.stark_cavity - db.stark_cavity) / 2.0,
    );
    let theta = (da.stark_laser - db.stark_laser) / 2.0;
    let ut = upsilon + I * theta;
    let pref = da.g_bar * params.cascade_coupling() * Complex64::from_polar(1.0, params.phi())
        / (ma.lambda * mb.lambda);
    let f = |sign: f64| pref * ((-mb.s + sign * mb.lambda / 2.0) * t).exp();
    let g = |sign: f64| expm1_ratio((ma.lambda + sign * mb.lambda) / 2.0 - ut, t);
    let h = |sign: f64| -expm1_ratio(-((ma.lambda + sign * mb.lambda) / 2.0 + ut), t);
    ClosedFormIntermediates {
        t,
        lambda_a: ma.lambda,
        lambda_b: mb.lambda,
        upsilon,
        theta,
        f_plus: f(1.0),
        f_minus: f(-1.0),
        g_plus: g(1.0),
        g_minus: g(-1.0),
        h_plus: h(1.0),
        h_minus: h(-1.0),
    }
}

/// Driven-phase (α, β) for a given choice of Λ. Both branches ±Λ give the
/// same result.
fn source_pair(d: &DerivedParams, modes: &Modes, t: f64) -> (Complex64, Complex64) {
    let c = 2.0 * modes.r;
    let sinh_term = exp_divided_difference(modes.x_plus, modes.x_minus, t);
    let alpha = ((modes.x_plus * t).exp() + (modes.x_minus * t).exp()) / 2.0 + c / 2.0 * sinh_term;
    let beta = -I * d.g_bar * sinh_term;
    (alpha, beta)
}

/// (γ, δ) from the general solution: the f±(g∓ + h±) products expanded into
/// first divided differences of the exponential over the eigenvalues of
/// both subsystems.
fn target_pair_general(
    params: &SystemParams,
    ma: &Modes,
    mb: &Modes,
    t: f64,
) -> (Complex64, Complex64) {
    let da = params.derived_a();
    let db = params.derived_b();
    let coupling = params.cascade_coupling() * Complex64::from_polar(1.0, params.phi());
    let pref = da.g_bar * coupling / (ma.lambda * mb.lambda);
    // f₊g₋, f₊h₊, f₋g₊, f₋h₋ without the common prefactor.
    let fg_minus = exp_divided_difference(ma.x_plus, mb.x_plus, t);
    let fh_plus = -exp_divided_difference(ma.x_minus, mb.x_plus, t);
    let fg_plus = exp_divided_difference(ma.x_plus, mb.x_minus, t);
    let fh_minus = -exp_divided_difference(ma.x_minus, mb.x_minus, t);
    let plus = pref * (fg_minus + fh_plus);
    let minus = pref * (fg_plus + fh_minus);
    let gamma = db.g_bar * (plus - minus);
    let delta = I * (mb.r + mb.lambda / 2.0) * minus - I * (mb.r - mb.lambda / 2.0) * plus;
    (gamma, delta)
}

/// (γ, δ) for identical subsystems (same Λ and s), where two of the
/// g±/h± denominators vanish and their limits ±t have been taken.
fn target_pair_equal(params: &SystemParams, m: &Modes, t: f64) -> (Complex64, Complex64) {
    let da = params.derived_a();
    let db = params.derived_b();
    let lam = m.lambda;
    let lt = lam * t;
    let coupling = params.cascade_coupling() * Complex64::from_polar(1.0, params.phi());
    let e_up = ((-m.s + lam / 2.0) * t).exp();
    let e_dn = ((-m.s - lam / 2.0) * t).exp();
    // [e^{−Λt} + Λt − 1] e^{(−s+Λ/2)t} and [e^{Λt} − Λt − 1] e^{(−s−Λ/2)t}
    let bracket_up = e_dn + (lt - 1.0) * e_up;
    let bracket_dn = e_up - (lt + 1.0) * e_dn;
    let lam3 = lam * lam * lam;
    let gamma = coupling * da.g_bar * db.g_bar / lam3 * (bracket_up - bracket_dn);
    let pref = I * coupling * da.g_bar / lam3;
    let delta = pref * (m.r + lam / 2.0) * bracket_dn - pref * (m.r - lam / 2.0) * bracket_up;
    (gamma, delta)
}

/// (γ, δ) near critical damping, from third-order divided differences at
/// coalescing eigenvalues.
fn target_pair_confluent(
    params: &SystemParams,
    ma: &Modes,
    mb: &Modes,
    t: f64,
) -> (Complex64, Complex64) {
    let da = params.derived_a();
    let db = params.derived_b();
    let coupling = params.cascade_coupling() * Complex64::from_polar(1.0, params.phi());
    let f = exp_divided_differences_confluent([ma.x_plus, ma.x_minus, mb.x_plus, mb.x_minus], t);
    let cavity_diag = -Complex64::new(db.big_k / 2.0, db.stark_cavity);
    let gamma = coupling * da.g_bar * db.g_bar * f[3];
    let delta = I * da.g_bar * coupling * (f[2] + (cavity_diag - mb.x_plus) * f[3]);
    (gamma, delta)
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok(())
}

/// Which closed-form branch evaluates (γ, δ) for a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetBranch {
    General,
    EqualParameters,
    Confluent,
}

fn select_branch(ma: &Modes, mb: &Modes) -> TargetBranch {
    if (ma.lambda * mb.lambda).norm() < CRITICAL_DAMPING_THRESHOLD {
        TargetBranch::Confluent
    } else if (ma.x_plus - mb.x_plus).norm() < SINGULAR_THRESHOLD
        && (ma.x_minus - mb.x_minus).norm() < SINGULAR_THRESHOLD
    {
        TargetBranch::EqualParameters
    } else {
        TargetBranch::General
    }
}

/// The branch [`amplitudes_driven`] uses for these parameters.
pub fn target_branch(params: &SystemParams) -> TargetBranch {
    select_branch(&Modes::new(params.derived_a()), &Modes::new(params.derived_b()))
}

fn driven_with_branch(params: &SystemParams, t: f64, branch: TargetBranch) -> AmplitudeState {
    let ma = Modes::new(params.derived_a());
    let mb = Modes::new(params.derived_b());
    let (alpha, beta) = source_pair(params.derived_a(), &ma, t);
    let (gamma, delta) = match branch {
        TargetBranch::General => target_pair_general(params, &ma, &mb, t),
        TargetBranch::EqualParameters => target_pair_equal(params, &mb, t),
        TargetBranch::Confluent => target_pair_confluent(params, &ma, &mb, t),
    };
    AmplitudeState {
        t,
        alpha,
        beta,
        gamma,
        delta,
        laser_on: true,
    }
}

/// Closed-form amplitudes with the lasers on, from α(0) = 1.
pub fn amplitudes_driven(params: &SystemParams, t: f64) -> Result<AmplitudeState> {
    check_time(t)?;
    Ok(driven_with_branch(params, t, target_branch(params)))
}

/// Forces a specific (γ, δ) branch. Intended for cross-checks between the
/// general, equal-parameter and confluent forms.
pub fn amplitudes_driven_via(
    params: &SystemParams,
    t: f64,
    branch: TargetBranch,
) -> Result<AmplitudeState> {
    check_time(t)?;
    Ok(driven_with_branch(params, t, branch))
}

/// Amplitudes after the lasers were switched off at `at_tbar.t`.
///
/// α and γ freeze; β decays freely and δ is fed by β through the cascade.
pub fn amplitudes_stored(
    params: &SystemParams,
    at_tbar: &AmplitudeState,
    t: f64,
) -> Result<AmplitudeState> {
    check_time(t)?;
    if t < at_tbar.t {
        return Err(Error::TimeBeforeSwitchOff { t, tbar: at_tbar.t });
    }
    let tau = t - at_tbar.t;
    let da = params.derived_a();
    let db = params.derived_b();
    let pa = -Complex64::new(da.big_k / 2.0, da.stark_cavity);
    let pb = -Complex64::new(db.big_k / 2.0, db.stark_cavity);
    let coupling = params.cascade_coupling() * Complex64::from_polar(1.0, params.phi());
    let beta = at_tbar.beta * (pa * tau).exp();
    let delta = at_tbar.delta * (pb * tau).exp()
        - coupling * at_tbar.beta * exp_divided_difference(pa, pb, tau);
    Ok(AmplitudeState {
        t,
        alpha: at_tbar.alpha,
        beta,
        gamma: at_tbar.gamma,
        delta,
        laser_on: false,
    })
}

/// Evaluates the two-phase protocol (drive, then store) at arbitrary times,
/// caching the state at the switch-off time.
#[derive(Debug, Clone, Copy)]
pub struct Protocol {
    params: SystemParams,
    schedule: Schedule,
    at_tbar: Option<AmplitudeState>,
}

impl Protocol {
    pub fn new(params: &SystemParams, schedule: Schedule) -> Self {
        let at_tbar = schedule.tbar().map(|tb| driven_with_branch(params, tb, target_branch(params)));
        Self {
            params: *params,
            schedule,
            at_tbar,
        }
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule
    }

    /// Driven formulas for t ≤ t̄, storage formulas for t > t̄.
    pub fn state_at(&self, t: f64) -> Result<AmplitudeState> {
        check_time(t)?;
        match self.at_tbar {
            Some(ref s) if t > s.t => amplitudes_stored(&self.params, s, t),
            _ => amplitudes_driven(&self.params, t),
        }
    }
}

/// One-shot evaluation of the two-phase protocol.
pub fn evolve_protocol(params: &SystemParams, schedule: Schedule, t: f64) -> Result<AmplitudeState> {
    Protocol::new(params, schedule).state_at(t)
}

/// Locates the switch-off time maximizing the atom-atom concurrence
/// 2|α||γ| over `[t_lo, t_hi]`.
///
/// Grid scan at [`TBAR_SCAN_STEP`], then a parabolic refinement through the
/// best grid point and its neighbours. The left-most maximizer wins ties.
pub fn find_tbar(params: &SystemParams, t_lo: f64, t_hi: f64) -> Result<f64> {
    if !(t_lo.is_finite() && t_hi.is_finite()) || t_lo < 0.0 || t_hi <= t_lo {
        return Err(Error::EmptyWindow { lo: t_lo, hi: t_hi });
    }
    let c = |t: f64| {
        let s = driven_with_branch(params, t, target_branch(params));
        2.0 * s.alpha.norm() * s.gamma.norm()
    };
    let n = ((t_hi - t_lo) / TBAR_SCAN_STEP).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| t_lo + i as f64 * TBAR_SCAN_STEP).collect();
    if *grid.last().unwrap() < t_hi {
        grid.push(t_hi);
    }
    let values: Vec<f64> = grid.iter().map(|&t| c(t)).collect();
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    if best == 0 || best + 1 == grid.len() {
        return Ok(grid[best]);
    }
    let (f0, f1, f2) = (values[best - 1], values[best], values[best + 1]);
    let h = TBAR_SCAN_STEP;
    let curvature = f0 - 2.0 * f1 + f2;
    if curvature >= 0.0 {
        return Ok(grid[best]);
    }
    let offset = (0.5 * h * (f0 - f2) / curvature).clamp(-h, h);
    let refined = grid[best] + offset;
    if c(refined) >= f1 {
        Ok(refined)
    } else {
        Ok(grid[best])
    }
}
