//! Where the lost probability goes, and what a photodetector that stays
//! silent tells us about the atoms.
//!
//! A jump through the radiated channel hits a beam splitter of
//! transmittivity √η in front of an ideal counter, so each radiated
//! photon clicks with probability η. Mirror-loss jumps are never seen.

use num_complex::Complex64;
use serde::Serialize;

use crate::analytic::{AmplitudeState, Protocol, Schedule};
use crate::dynamics::{jump_rates, Grid, JumpChannel, Unraveling, DEFAULT_DT};
use crate::entanglement::{single_excitation, TwoQubitDensity};
use crate::error::{Error, Result};
use crate::numeric::{even_panels, simpson};
use crate::params::SystemParams;

/// Detector efficiency used when none is given.
pub const DEFAULT_ETA: f64 = 0.88;

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidEfficiency(eta));
    }
    Ok(())
}

/// Probability bookkeeping at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelProbabilities {
    pub t: f64,
    pub p_no: f64,
    /// Probability that a photon has been radiated by the cascade.
    pub p_rad: f64,
    /// Probability that a photon has been absorbed or scattered by a mirror.
    pub p_abs: f64,
    pub p_yes: f64,
    pub eta: f64,
    /// Probability that the detector has not clicked, 1 − η·p_rad.
    pub p0: f64,
}

impl ChannelProbabilities {
    /// p_no + (1 − η)p_rad + p_abs; equals `p0` up to quadrature error.
    pub fn p0_from_records(&self) -> f64 {
        self.p_no + (1.0 - self.eta) * self.p_rad + self.p_abs
    }

    /// Same probabilities seen by a detector of another efficiency.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(Self {
            eta,
            p0: 1.0 - eta * self.p_rad,
            ..*self
        })
    }
}

/// p_rad and p_abs by composite Simpson quadrature of the jump rates.
///
/// The step is at most 1e-3/𝒦 and the integration is split at t̄.
pub fn channel_probabilities(
    params: &SystemParams,
    schedule: Schedule,
    t: f64,
    eta: f64,
) -> Result<ChannelProbabilities> {
    Ok(channel_probability_series(params, schedule, &[t], eta)?[0])
}

/// [`channel_probabilities`] at each of the ascending `times`, integrating
/// incrementally between them.
pub fn channel_probability_series(
    params: &SystemParams,
    schedule: Schedule,
    times: &[f64],
    eta: f64,
) -> Result<Vec<ChannelProbabilities>> {
    check_eta(eta)?;
    let protocol = Protocol::new(params, schedule);
    let rates = |t: f64| {
        let s = protocol.state_at(t).unwrap_or(AmplitudeState::from_array(t, [Complex64::new(0.0, 0.0); 4], false));
        let r = jump_rates(params, &s);
        [r.radiated, r.mirror_loss()]
    };
    let mut out = Vec::with_capacity(times.len());
    let (mut t_prev, mut acc) = (0.0, [0.0f64; 2]);
    for &t in times {
        if !t.is_finite() || t < t_prev {
            return Err(Error::NegativeTime(t));
        }
        let mut cuts = vec![t_prev];
        if let Some(tb) = schedule.tbar().filter(|&tb| tb > t_prev && tb < t) {
            cuts.push(tb);
        }
        cuts.push(t);
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                let part = simpson(rates, w[0], w[1], even_panels(w[1] - w[0], DEFAULT_DT));
                acc[0] += part[0];
                acc[1] += part[1];
            }
        }
        t_prev = t;
        let p_no = protocol.state_at(t)?.p_no();
        let (p_rad, p_abs) = (acc[0].clamp(0.0, 1.0), acc[1].clamp(0.0, 1.0));
        out.push(ChannelProbabilities {
            t,
            p_no,
            p_rad,
            p_abs,
            p_yes: 1.0 - p_no,
            eta,
            p0: 1.0 - eta * p_rad,
        });
    }
    Ok(out)
}

/// Atoms given that no photon at all has left the cascade: the no-jump
/// atom block renormalized by p_no, with the cavity weight |β|² + |δ|² on
/// |0,0⟩.
pub fn rho_atoms_given_no_loss(state: &AmplitudeState) -> Result<TwoQubitDensity> {
    let p_no = state.norm_sqr();
    if p_no <= 0.0 {
        return Err(Error::ZeroSurvivalProbability);
    }
    TwoQubitDensity::new(single_excitation(state.alpha, state.gamma, 1.0 / p_no))
}

/// State conditioned on a silent detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalState {
    /// Weight of the normalized no-jump state.
    pub no_jump_weight: f64,
    /// Weight of |e⟩ (undetected radiated photon or mirror loss).
    pub collapsed_weight: f64,
    /// Atom reduction of the conditioned state.
    pub rho_atoms: TwoQubitDensity,
}

/// ρ₀ = [p_no ρ_no + ((1 − η)p_rad + p_abs)|e⟩⟨e|]/p₀ and its atom
/// reduction.
///
/// The weights are normalized by their own sum rather than by `probs.p0`,
/// so the trace is exactly one despite quadrature error.
pub fn conditional_state(state: &AmplitudeState, probs: &ChannelProbabilities) -> Result<ConditionalState> {
    check_eta(probs.eta)?;
    if probs.p0 <= 0.0 {
        return Err(Error::ZeroNullClickProbability);
    }
    let p_no = state.norm_sqr();
    let collapsed = (1.0 - probs.eta) * probs.p_rad + probs.p_abs;
    let total = p_no + collapsed;
    if total <= 0.0 {
        return Err(Error::ZeroNullClickProbability);
    }
    Ok(ConditionalState {
        no_jump_weight: p_no / total,
        collapsed_weight: collapsed / total,
        rho_atoms: TwoQubitDensity::new(single_excitation(state.alpha, state.gamma, 1.0 / total))?,
    })
}

/// 2|α||γ|/p₀.
pub fn concurrence_conditional(state: &AmplitudeState, probs: &ChannelProbabilities) -> Result<f64> {
    check_eta(probs.eta)?;
    if probs.p0 <= 0.0 {
        return Err(Error::ZeroNullClickProbability);
    }
    Ok((2.0 * state.alpha.norm() * state.gamma.norm() / probs.p0).clamp(0.0, 1.0))
}

/// Tallies of the four detection records over an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RecordStatistics {
    pub n: usize,
    /// No jump up to the horizon.
    pub no_jump: usize,
    /// Radiated photon transmitted to the detector.
    pub clicked: usize,
    /// Radiated photon reflected by the beam splitter, never seen.
    pub reflected: usize,
    /// Photon absorbed or scattered by a cavity mirror.
    pub lost: usize,
}

impl RecordStatistics {
    /// Fraction of runs without a click.
    pub fn p0_empirical(&self) -> f64 {
        (self.n - self.clicked) as f64 / self.n as f64
    }

    /// Binomial standard error of [`Self::p0_empirical`].
    pub fn p0_standard_error(&self) -> f64 {
        let p = self.p0_empirical();
        (p * (1.0 - p) / self.n as f64).sqrt()
    }
}

/// Runs `n` trajectories on the default grid and classifies each record.
pub fn simulate_records(
    params: &SystemParams,
    schedule: Schedule,
    eta: f64,
    n: usize,
    seed: u64,
) -> Result<RecordStatistics> {
    simulate_records_on(params, schedule, Grid::default(), eta, n, seed)
}

pub fn simulate_records_on(
    params: &SystemParams,
    schedule: Schedule,
    grid: Grid,
    eta: f64,
    n: usize,
    seed: u64,
) -> Result<RecordStatistics> {
    check_eta(eta)?;
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let unravel = Unraveling::new(params, schedule, grid)?;
    let mut stats = RecordStatistics {
        n,
        no_jump: 0,
        clicked: 0,
        reflected: 0,
        lost: 0,
    };
    for (rec, draws) in unravel.ensemble_with_draws(n, seed) {
        match rec.channel() {
            None => stats.no_jump += 1,
            Some(JumpChannel::Radiated) if draws.detector < eta => stats.clicked += 1,
            Some(JumpChannel::Radiated) => stats.reflected += 1,
            Some(_) => stats.lost += 1,
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{amplitudes_driven, evolve_protocol};
    use crate::entanglement::{concurrence, rho_atoms};
    use crate::params::SubsystemParams;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn baseline(kappa: f64) -> SystemParams {
        SystemParams::symmetric(SubsystemParams::new(10.0, 10.0, 1000.0, kappa, 1.0 - kappa), 0.0).unwrap()
    }

    fn stored() -> Schedule {
        Schedule::switch_off_at(28.32).unwrap()
    }

    #[test]
    fn nothing_happens_at_time_zero() {
        let p = channel_probabilities(&baseline(0.9), stored(), 0.0, 0.88).unwrap();
        assert_eq!((p.p_no, p.p_rad, p.p_abs, p.p0), (1.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn baseline_budget() {
        let p = channel_probabilities(&baseline(0.9), stored(), 100.0, 0.88).unwrap();
        assert!((p.p_abs - 0.2).abs() < 0.01, "{p:?}");
        assert!((p.p_rad - 0.14).abs() < 0.01, "{p:?}");
        assert!((p.p_no - 0.66).abs() < 0.01, "{p:?}");
        assert!((p.p0 - 0.88).abs() < 0.01, "{p:?}");
        assert!((p.p_no + p.p_rad + p.p_abs - 1.0).abs() < 1e-6);
        assert!((p.p0 - p.p0_from_records()).abs() < 1e-6);
    }

    #[test]
    fn series_matches_single_evaluations() {
        let times = [0.0, 5.0, 28.0, 30.0, 50.0];
        let s = channel_probability_series(&baseline(0.9), stored(), &times, 0.5).unwrap();
        for (t, got) in times.iter().zip(&s) {
            let one = channel_probabilities(&baseline(0.9), stored(), *t, 0.5).unwrap();
            assert!((got.p_rad - one.p_rad).abs() < 1e-10);
            assert!((got.p_abs - one.p_abs).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_efficiency() {
        assert_eq!(
            channel_probabilities(&baseline(0.9), stored(), 1.0, 1.2).unwrap_err(),
            Error::InvalidEfficiency(1.2)
        );
        assert!(channel_probabilities(&baseline(0.9), stored(), 1.0, f64::NAN).is_err());
    }

    #[test]
    fn no_loss_bell_state() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = AmplitudeState::from_array(1.0, [c(h, 0.0), c(0.0, 0.0), c(h, 0.0), c(0.0, 0.0)], true);
        let r = rho_atoms_given_no_loss(&s).unwrap();
        assert!((concurrence(&r) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_loss_rejects_empty_state() {
        let s = AmplitudeState::from_array(1.0, [c(0.0, 0.0); 4], false);
        assert_eq!(rho_atoms_given_no_loss(&s).unwrap_err(), Error::ZeroSurvivalProbability);
    }

    #[test]
    fn perfect_detection_without_loss_is_near_maximal() {
        let p = baseline(1.0);
        let s = evolve_protocol(&p, stored(), 100.0).unwrap();
        let r = rho_atoms_given_no_loss(&s).unwrap();
        let c_no = concurrence(&r);
        assert!(c_no > 0.99, "{c_no}");
        let probs = channel_probabilities(&p, stored(), 100.0, 1.0).unwrap();
        let cond = concurrence_conditional(&s, &probs).unwrap();
        assert!((cond - c_no).abs() < 1e-5);
    }

    #[test]
    fn blind_detector_is_unconditional() {
        let p = baseline(0.9);
        let s = evolve_protocol(&p, stored(), 100.0).unwrap();
        let probs = channel_probabilities(&p, stored(), 100.0, 0.0).unwrap();
        assert_eq!(probs.p0, 1.0);
        let cs = conditional_state(&s, &probs).unwrap();
        let unconditional = rho_atoms(&s).unwrap();
        let diff = (cs.rho_atoms.matrix() - unconditional.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-6);
        assert!((cs.no_jump_weight + cs.collapsed_weight - 1.0).abs() < 1e-15);
        assert_eq!(
            concurrence_conditional(&s, &probs).unwrap(),
            2.0 * s.alpha.norm() * s.gamma.norm()
        );
    }

    #[test]
    fn conditional_enhancement_at_baseline() {
        let p = baseline(0.9);
        let s = evolve_protocol(&p, stored(), 100.0).unwrap();
        let probs = channel_probabilities(&p, stored(), 100.0, 0.88).unwrap();
        let cond = concurrence_conditional(&s, &probs).unwrap();
        assert!((cond - 0.75).abs() < 0.01, "{cond}");
        let cs = conditional_state(&s, &probs).unwrap();
        assert!((concurrence(&cs.rho_atoms) - cond).abs() < 1e-5);
        let better = concurrence_conditional(&s, &probs.with_eta(0.95).unwrap()).unwrap();
        assert!(better >= cond);
    }

    #[test]
    fn zero_null_click_rejected() {
        let s = amplitudes_driven(&baseline(1.0), 1.0).unwrap();
        let probs = ChannelProbabilities {
            t: 1.0,
            p_no: 0.0,
            p_rad: 1.0,
            p_abs: 0.0,
            p_yes: 1.0,
            eta: 1.0,
            p0: 0.0,
        };
        assert_eq!(concurrence_conditional(&s, &probs).unwrap_err(), Error::ZeroNullClickProbability);
        assert_eq!(conditional_state(&s, &probs).unwrap_err(), Error::ZeroNullClickProbability);
    }

    #[test]
    fn blind_detector_never_clicks() {
        let grid = Grid::new(40.0, 1e-2).unwrap();
        let r = simulate_records_on(&baseline(0.9), stored(), grid, 0.0, 2000, 5).unwrap();
        assert_eq!(r.clicked, 0);
        assert_eq!(r.p0_empirical(), 1.0);
        assert_eq!(r.no_jump + r.clicked + r.reflected + r.lost, r.n);
    }

    #[test]
    fn records_are_reproducible() {
        let grid = Grid::new(40.0, 1e-2).unwrap();
        let a = simulate_records_on(&baseline(0.9), stored(), grid, 0.88, 500, 9).unwrap();
        let b = simulate_records_on(&baseline(0.9), stored(), grid, 0.88, 500, 9).unwrap();
        assert_eq!(a, b);
    }
}
