//! Numerical propagation of the no-jump state and its quantum-jump
//! unraveling.
//!
//! [`integrate`] is an RK4 solution of d/dt(α,β,γ,δ) = M(α,β,γ,δ) and
//! serves as the independent oracle for the closed forms. Trajectories use
//! the delay-function method: a uniform r is drawn and the jump happens
//! when the no-jump probability first falls to r. After the jump the
//! system sits in |e⟩ (all atoms in |0⟩, both cavities empty) forever.

use nalgebra::{Matrix4, Matrix5, Vector4};
use num_complex::Complex64;
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{AmplitudeState, Protocol, Schedule};
use crate::error::{Error, Result};
use crate::numeric::{inf_norm, rk4_step, I};
use crate::params::SystemParams;

/// Default integration horizon, 100/𝒦.
pub const DEFAULT_T_MAX: f64 = 100.0;
/// Default step, 1e-3/𝒦.
pub const DEFAULT_DT: f64 = 1e-3;
/// Largest allowed dt·‖M‖∞.
pub const MAX_STEP_NORM: f64 = 0.1;

/// Relative tolerance of the jump-time bisection.
const JUMP_TIME_RTOL: f64 = 1e-10;

/// Coefficient matrix of the linear no-jump equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorMatrix {
    pub matrix: Matrix4<Complex64>,
    pub laser_on: bool,
}

/// Builds M for d/dt(α,β,γ,δ)ᵀ = M(α,β,γ,δ)ᵀ. With the laser off the Raman
/// coupling ḡ and the laser Stark shift Δ′ vanish, so the α and γ rows are
/// zero.
pub fn generator(params: &SystemParams, laser_on: bool) -> GeneratorMatrix {
    let (da, db) = if laser_on {
        (*params.derived_a(), *params.derived_b())
    } else {
        (params.derived_a().laser_off(), params.derived_b().laser_off())
    };
    let z = Complex64::new(0.0, 0.0);
    let cascade = -params.cascade_coupling() * Complex64::from_polar(1.0, params.phi());
    let cav_a = -Complex64::new(da.big_k / 2.0, da.stark_cavity);
    let cav_b = -Complex64::new(db.big_k / 2.0, db.stark_cavity);
    #[rustfmt::skip]
    let matrix = Matrix4::new(
        -I * da.stark_laser, -I * da.g_bar, z,                   z,
        -I * da.g_bar,       cav_a,         z,                   z,
        z,                   z,             -I * db.stark_laser, -I * db.g_bar,
        z,                   cascade,       -I * db.g_bar,       cav_b,
    );
    GeneratorMatrix { matrix, laser_on }
}

/// Time grid for numerical integration and trajectory sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub t_max: f64,
    pub dt: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            t_max: DEFAULT_T_MAX,
            dt: DEFAULT_DT,
        }
    }
}

impl Grid {
    pub fn new(t_max: f64, dt: f64) -> Result<Self> {
        let g = Self { t_max, dt };
        g.check()?;
        Ok(g)
    }

    fn check(&self) -> Result<()> {
        if !(self.t_max.is_finite() && self.dt.is_finite()) || self.t_max < 0.0 || self.dt <= 0.0 {
            return Err(Error::InvalidGrid {
                t_max: self.t_max,
                dt: self.dt,
            });
        }
        Ok(())
    }

    /// Phases [t₀, t₁] with the laser flag, split at t̄ when it falls
    /// inside the grid.
    fn phases(&self, schedule: Schedule) -> Vec<(f64, f64, bool)> {
        match schedule.tbar() {
            Some(tb) if tb < self.t_max => vec![(0.0, tb, true), (tb, self.t_max, false)],
            _ => vec![(0.0, self.t_max, true)],
        }
    }

    /// Nodes of each phase: equal steps no longer than `dt`, endpoints
    /// included exactly.
    pub fn nodes(&self, schedule: Schedule) -> Vec<f64> {
        let mut out = vec![0.0];
        for (t0, t1, _) in self.phases(schedule) {
            let n = steps(t1 - t0, self.dt);
            let h = (t1 - t0) / n as f64;
            out.extend((1..=n).map(|i| if i == n { t1 } else { t0 + i as f64 * h }));
        }
        out
    }
}

fn steps(len: f64, dt: f64) -> usize {
    if len <= 0.0 {
        0
    } else {
        ((len / dt).ceil() as usize).max(1)
    }
}

/// Fixed-step RK4 integration of the no-jump state from |a⟩.
///
/// When the schedule switches the lasers off inside the grid, the step is
/// split so that t̄ is a grid node. Fails with `StepTooLarge` when
/// dt·‖M‖∞ exceeds [`MAX_STEP_NORM`] in either phase.
pub fn integrate(params: &SystemParams, schedule: Schedule, grid: Grid) -> Result<Vec<AmplitudeState>> {
    grid.check()?;
    let mut x = Vector4::new(
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
    );
    let mut out = vec![AmplitudeState::initial()];
    for (t0, t1, laser_on) in grid.phases(schedule) {
        let m = generator(params, laser_on).matrix;
        let norm = inf_norm(&m);
        if grid.dt * norm > MAX_STEP_NORM {
            return Err(Error::StepTooLarge { dt: grid.dt, norm });
        }
        let n = steps(t1 - t0, grid.dt);
        let h = (t1 - t0) / n as f64;
        for i in 1..=n {
            x = rk4_step(&m, &x, h);
            let t = if i == n { t1 } else { t0 + i as f64 * h };
            out.push(AmplitudeState::from_array(t, [x[0], x[1], x[2], x[3]], laser_on));
        }
    }
    Ok(out)
}

/// The three decay channels that collapse the system to |e⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum JumpChannel {
    /// Photon leaves through the output mirrors into the radiated field
    /// (superposition of both cavities' outputs).
    Radiated,
    /// Absorption or scattering by the mirrors of cavity A.
    MirrorLossA,
    /// Absorption or scattering by the mirrors of cavity B.
    MirrorLossB,
}

impl JumpChannel {
    pub const ALL: [JumpChannel; 3] = [Self::Radiated, Self::MirrorLossA, Self::MirrorLossB];

    pub fn index(self) -> usize {
        match self {
            Self::Radiated => 0,
            Self::MirrorLossA => 1,
            Self::MirrorLossB => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Radiated => "radiated",
            Self::MirrorLossA => "mirror_loss_a",
            Self::MirrorLossB => "mirror_loss_b",
        }
    }
}

/// ⟨J†J⟩ per channel on the unnormalized no-jump state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpRates {
    pub radiated: f64,
    pub mirror_loss_a: f64,
    pub mirror_loss_b: f64,
}

impl JumpRates {
    pub fn as_array(&self) -> [f64; 3] {
        [self.radiated, self.mirror_loss_a, self.mirror_loss_b]
    }

    pub fn total(&self) -> f64 {
        self.radiated + self.mirror_loss_a + self.mirror_loss_b
    }

    pub fn mirror_loss(&self) -> f64 {
        self.mirror_loss_a + self.mirror_loss_b
    }
}

pub fn jump_rates(params: &SystemParams, state: &AmplitudeState) -> JumpRates {
    let (a, b) = (params.a(), params.b());
    let field = a.kappa.sqrt() * state.beta
        + b.kappa.sqrt() * Complex64::from_polar(1.0, -params.phi()) * state.delta;
    JumpRates {
        radiated: field.norm_sqr(),
        mirror_loss_a: a.kappa_loss * state.beta.norm_sqr(),
        mirror_loss_b: b.kappa_loss * state.delta.norm_sqr(),
    }
}

/// Σ⟨J†J⟩ over the four spontaneous-emission channels of both atoms,
/// evaluated on the five-state basis. Diagnostic only; these channels are
/// never unraveled.
///
/// For subsystem A this is (γ_a + γ_a′)/Δ_a² · |Ω_a α + g_a β|², and the
/// same with (γ, δ) for B. Ω is zero once the lasers are off.
pub fn spont_emission_bound(params: &SystemParams, state: &AmplitudeState) -> f64 {
    let term = |p: &crate::params::SubsystemParams, atom: Complex64, photon: Complex64| {
        let omega = if state.laser_on { p.omega_rabi } else { 0.0 };
        (p.gamma + p.gamma_prime) / (p.detuning * p.detuning) * (omega * atom + p.g * photon).norm_sqr()
    };
    term(params.a(), state.alpha, state.beta) + term(params.b(), state.gamma, state.delta)
}

/// A single jump: when and through which channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump {
    pub time: f64,
    pub channel: JumpChannel,
}

/// Outcome of one Monte-Carlo realization up to the grid horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub jump: Option<Jump>,
    pub seed: u64,
}

impl TrajectoryRecord {
    pub fn jump_time(&self) -> Option<f64> {
        self.jump.map(|j| j.time)
    }

    pub fn channel(&self) -> Option<JumpChannel> {
        self.jump.map(|j| j.channel)
    }

    /// Whether a jump has happened at or before `t`.
    pub fn jumped_by(&self, t: f64) -> bool {
        self.jump.is_some_and(|j| j.time <= t)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trajectory `index` in an ensemble with `master_seed`. Depends
/// only on the pair, so ensembles can be evaluated in any order.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Uniform draws consumed by one trajectory, in order.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Draws {
    /// Threshold for the delay function.
    pub(crate) survival: f64,
    /// Channel selection at the jump.
    pub(crate) channel: f64,
    /// Beam-splitter draw deciding whether a radiated photon is detected.
    pub(crate) detector: f64,
}

impl Draws {
    fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            survival: rng.sample(Open01),
            channel: rng.sample(Open01),
            detector: rng.sample(Open01),
        }
    }
}

/// Trajectory sampler for a fixed parameter set, schedule and horizon.
///
/// The no-jump probability is deterministic and shared by all trajectories,
/// so it is tabulated once on the grid; each trajectory then brackets its
/// crossing in the table and bisects on the closed-form p_no.
#[derive(Debug, Clone)]
pub struct Unraveling {
    protocol: Protocol,
    grid: Grid,
    times: Vec<f64>,
    survival: Vec<f64>,
}

impl Unraveling {
    pub fn new(params: &SystemParams, schedule: Schedule, grid: Grid) -> Result<Self> {
        grid.check()?;
        let protocol = Protocol::new(params, schedule);
        let times = grid.nodes(schedule);
        let survival = times
            .iter()
            .map(|&t| protocol.state_at(t).map(|s| s.norm_sqr()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            protocol,
            grid,
            times,
            survival,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn protocol(&self) -> &Protocol {
        &self.protocol
    }

    /// Tabulated (t, p_no(t)).
    pub fn survival_table(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.survival.iter().copied())
    }

    fn p_no(&self, t: f64) -> f64 {
        self.protocol.state_at(t).map(|s| s.norm_sqr()).unwrap_or(0.0)
    }

    fn jump_time(&self, r: f64) -> Option<f64> {
        let idx = self.survival.partition_point(|&p| p > r);
        if idx >= self.times.len() {
            return None;
        }
        if idx == 0 {
            return Some(0.0);
        }
        let (mut lo, mut hi) = (self.times[idx - 1], self.times[idx]);
        for _ in 0..200 {
            if hi - lo <= JUMP_TIME_RTOL * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.p_no(mid) > r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    fn pick_channel(&self, t: f64, u: f64) -> JumpChannel {
        let rates = self
            .protocol
            .state_at(t)
            .map(|s| jump_rates(self.protocol.params(), &s).as_array())
            .unwrap_or([0.0; 3]);
        let total: f64 = rates.iter().sum();
        if total <= 0.0 {
            return JumpChannel::Radiated;
        }
        let mut acc = 0.0;
        for ch in JumpChannel::ALL {
            acc += rates[ch.index()];
            if u * total < acc {
                return ch;
            }
        }
        JumpChannel::MirrorLossB
    }

    pub(crate) fn sample(&self, seed: u64) -> (TrajectoryRecord, Draws) {
        let draws = Draws::from_seed(seed);
        let jump = self.jump_time(draws.survival).map(|time| Jump {
            time,
            channel: self.pick_channel(time, draws.channel),
        });
        (TrajectoryRecord { jump, seed }, draws)
    }

    /// One trajectory from an explicit seed.
    pub fn trajectory(&self, seed: u64) -> TrajectoryRecord {
        self.sample(seed).0
    }

    /// `n` trajectories with seeds derived from `master_seed`, in index
    /// order regardless of how the work was scheduled.
    pub fn ensemble(&self, n: usize, master_seed: u64) -> Vec<TrajectoryRecord> {
        (0..n as u64)
            .into_par_iter()
            .map(|i| self.trajectory(derive_seed(master_seed, i)))
            .collect()
    }

    pub(crate) fn ensemble_with_draws(&self, n: usize, master_seed: u64) -> Vec<(TrajectoryRecord, Draws)> {
        (0..n as u64)
            .into_par_iter()
            .map(|i| self.sample(derive_seed(master_seed, i)))
            .collect()
    }
}

/// One trajectory on the default grid (t_max = 100/𝒦, dt = 1e-3/𝒦).
pub fn simulate_trajectory(params: &SystemParams, schedule: Schedule, seed: u64) -> Result<TrajectoryRecord> {
    Ok(Unraveling::new(params, schedule, Grid::default())?.trajectory(seed))
}

/// Empirical mixture at time `t` built from an ensemble of trajectories.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleDensity {
    pub t: f64,
    pub n: usize,
    pub survivors: usize,
    /// Jumps up to `t`, indexed by [`JumpChannel::index`].
    pub jumps_by_channel: [usize; 3],
    /// Normalized no-jump state |ψ̄_no(t)⟩/√p_no(t); `None` when p_no = 0.
    pub conditioned: Option<AmplitudeState>,
}

impl EnsembleDensity {
    pub fn p_no(&self) -> f64 {
        self.survivors as f64 / self.n as f64
    }

    pub fn p_yes(&self) -> f64 {
        self.jumps_by_channel.iter().sum::<usize>() as f64 / self.n as f64
    }

    pub fn channel_share(&self, channel: JumpChannel) -> f64 {
        self.jumps_by_channel[channel.index()] as f64 / self.n as f64
    }

    /// p_no|ψ_no⟩⟨ψ_no| + p_yes|e⟩⟨e| in the basis |a⟩,|b⟩,|c⟩,|d⟩,|e⟩.
    pub fn mixture(&self) -> Matrix5<Complex64> {
        let mut m = Matrix5::<Complex64>::zeros();
        if let Some(s) = self.conditioned {
            let v = s.as_array();
            for i in 0..4 {
                for j in 0..4 {
                    m[(i, j)] = v[i] * v[j].conj() * self.p_no();
                }
            }
        }
        m[(4, 4)] = Complex64::new(self.p_yes(), 0.0);
        m
    }
}

/// Runs `n` trajectories up to `t` and tallies the surviving and jumped
/// fractions.
pub fn ensemble_density(
    params: &SystemParams,
    schedule: Schedule,
    n: usize,
    seed: u64,
    t: f64,
) -> Result<EnsembleDensity> {
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let grid = Grid::new(t, DEFAULT_DT.min(t.max(f64::MIN_POSITIVE)))?;
    let unravel = Unraveling::new(params, schedule, grid)?;
    let records = unravel.ensemble(n, seed);
    let mut jumps_by_channel = [0usize; 3];
    for r in &records {
        if let Some(j) = r.jump.filter(|j| j.time <= t) {
            jumps_by_channel[j.channel.index()] += 1;
        }
    }
    let survivors = n - jumps_by_channel.iter().sum::<usize>();
    let state = unravel.protocol().state_at(t)?;
    let norm = state.norm_sqr();
    let conditioned = (norm > 0.0).then(|| {
        let k = 1.0 / norm.sqrt();
        AmplitudeState::from_array(t, state.as_array().map(|z| z * k), state.laser_on)
    });
    Ok(EnsembleDensity {
        t,
        n,
        survivors,
        jumps_by_channel,
        conditioned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::amplitudes_driven;
    use crate::params::SubsystemParams;

    fn baseline() -> SystemParams {
        SystemParams::symmetric(SubsystemParams::new(10.0, 10.0, 1000.0, 0.9, 0.1), 0.0).unwrap()
    }

    #[test]
    fn generator_pure_decay_without_coupling() {
        let p = SystemParams::symmetric(SubsystemParams::new(0.0, 0.0, 1000.0, 0.9, 0.1), 0.0).unwrap();
        let m = generator(&p, true).matrix;
        let z = Complex64::new(0.0, 0.0);
        assert_eq!(m.row(0).iter().copied().collect::<Vec<_>>(), vec![z; 4]);
        assert_eq!(m[(1, 1)], Complex64::new(-0.5, 0.0));
        assert_eq!(m[(3, 1)], Complex64::new(-0.9, 0.0));
        for (r, c) in [(0, 2), (0, 3), (1, 2), (1, 3), (2, 0), (2, 1)] {
            assert_eq!(m[(r, c)], z);
        }
    }

    #[test]
    fn generator_cascade_entry_at_baseline() {
        let m = generator(&baseline(), true).matrix;
        assert!((m[(3, 1)] - Complex64::new(-0.9, 0.0)).norm() < 1e-15);
        assert!((m[(0, 1)] - Complex64::new(0.0, 0.1)).norm() < 1e-15);
        assert!((m[(1, 1)] - Complex64::new(-0.5, 0.1)).norm() < 1e-15);
    }

    #[test]
    fn generator_laser_off_freezes_atoms() {
        let m = generator(&baseline(), false).matrix;
        for c in 0..4 {
            assert_eq!(m[(0, c)].norm(), 0.0);
            assert_eq!(m[(2, c)].norm(), 0.0);
        }
        // Columns acting on α and γ vanish too.
        for r in 0..4 {
            assert_eq!(m[(r, 0)].norm(), 0.0);
            assert_eq!(m[(r, 2)].norm(), 0.0);
        }
        assert!(!generator(&baseline(), false).laser_on);
    }

    #[test]
    fn integrate_zero_horizon() {
        let s = integrate(&baseline(), Schedule::always_on(), Grid::new(0.0, 1e-3).unwrap()).unwrap();
        assert_eq!(s, vec![AmplitudeState::initial()]);
    }

    #[test]
    fn integrate_contains_switch_off_node() {
        let sched = Schedule::switch_off_at(1.2345).unwrap();
        let s = integrate(&baseline(), sched, Grid::new(3.0, 0.01).unwrap()).unwrap();
        assert!(s.iter().any(|x| x.t == 1.2345 && x.laser_on));
        assert!(s.iter().filter(|x| x.t > 1.2345).all(|x| !x.laser_on));
        assert_eq!(s.last().unwrap().t, 3.0);
    }

    #[test]
    fn integrate_rejects_large_steps() {
        assert!(matches!(
            integrate(&baseline(), Schedule::always_on(), Grid { t_max: 1.0, dt: 0.5 }),
            Err(Error::StepTooLarge { .. })
        ));
        assert!(matches!(
            integrate(&baseline(), Schedule::always_on(), Grid { t_max: 1.0, dt: 0.0 }),
            Err(Error::InvalidGrid { .. })
        ));
    }

    #[test]
    fn rates_vanish_for_empty_cavities() {
        let r = jump_rates(&baseline(), &AmplitudeState::initial());
        assert_eq!(r.total(), 0.0);
    }

    #[test]
    fn radiated_channel_destructive_interference() {
        let p = baseline().with_phi(0.7).unwrap();
        let delta = Complex64::new(0.3, -0.1);
        let beta = -Complex64::from_polar(1.0, -0.7) * delta;
        let s = AmplitudeState::from_array(1.0, [0.5.into(), beta, 0.2.into(), delta], true);
        let r = jump_rates(&p, &s);
        assert!(r.radiated < 1e-30);
        assert!(r.mirror_loss_a > 0.0 && r.mirror_loss_b > 0.0);
    }

    #[test]
    fn spontaneous_bound_zero_cases() {
        let p = baseline();
        let s = amplitudes_driven(&p, 10.0).unwrap();
        assert_eq!(spont_emission_bound(&p, &s), 0.0);
        let sub = SubsystemParams::new(10.0, 0.0, 1000.0, 0.9, 0.1).with_spontaneous_emission(0.3, 0.2);
        let p = SystemParams::symmetric(sub, 0.0).unwrap();
        let s = AmplitudeState::from_array(5.0, [0.6.into(), 0.0.into(), 0.5.into(), 0.0.into()], true);
        assert_eq!(spont_emission_bound(&p, &s), 0.0);
    }

    #[test]
    fn spontaneous_bound_matches_hamiltonian_expectation() {
        // Σ⟨J†J⟩ = −(γ+γ′)/Δ ⟨H_A⟩ − (γ_b+γ_b′)/Δ_b ⟨H_B⟩.
        let a = SubsystemParams::new(10.0, 12.0, 900.0, 0.8, 0.2).with_spontaneous_emission(0.3, 0.1);
        let b = SubsystemParams::new(9.0, 10.0, 1100.0, 0.7, 0.1).with_spontaneous_emission(0.2, 0.4);
        let p = SystemParams::new(a, b, 1.1).unwrap();
        let s = amplitudes_driven(&p, 7.0).unwrap();
        let h = |d: &crate::params::DerivedParams, x: Complex64, y: Complex64| {
            d.stark_laser * x.norm_sqr() + d.stark_cavity * y.norm_sqr() + 2.0 * d.g_bar * (x.conj() * y).re
        };
        let expect = -(a.gamma + a.gamma_prime) / a.detuning * h(p.derived_a(), s.alpha, s.beta)
            - (b.gamma + b.gamma_prime) / b.detuning * h(p.derived_b(), s.gamma, s.delta);
        let got = spont_emission_bound(&p, &s);
        assert!((got - expect).abs() <= 1e-12 * expect.abs(), "{got} vs {expect}");
    }

    #[test]
    fn seeds_are_order_independent_and_distinct() {
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
        assert_ne!(derive_seed(7, 3), derive_seed(7, 4));
        assert_ne!(derive_seed(7, 3), derive_seed(8, 3));
    }

    #[test]
    fn no_coupling_never_jumps() {
        let p = SystemParams::symmetric(SubsystemParams::new(0.0, 10.0, 1000.0, 0.9, 0.1), 0.0).unwrap();
        let u = Unraveling::new(&p, Schedule::always_on(), Grid::new(10.0, 0.01).unwrap()).unwrap();
        for seed in 0..50 {
            let r = u.trajectory(seed);
            assert!(r.jump.is_none());
            assert!(r.jump_time().is_none() && r.channel().is_none());
        }
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let a = simulate_trajectory(&baseline(), Schedule::switch_off_at(28.32).unwrap(), 42).unwrap();
        let b = simulate_trajectory(&baseline(), Schedule::switch_off_at(28.32).unwrap(), 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seed, 42);
    }

    #[test]
    fn jump_time_hits_threshold() {
        let u = Unraveling::new(&baseline(), Schedule::always_on(), Grid::new(100.0, 1e-2).unwrap()).unwrap();
        let mut jumped = 0;
        for seed in 0..40 {
            let (rec, draws) = u.sample(seed);
            match rec.jump_time() {
                Some(t) => {
                    jumped += 1;
                    let p = u.p_no(t);
                    assert!((p - draws.survival).abs() < 1e-8, "p_no({t}) = {p}, r = {}", draws.survival);
                }
                None => assert!(u.p_no(100.0) > draws.survival),
            }
        }
        assert!(jumped > 0);
    }

    #[test]
    fn single_surviving_trajectory_gives_pure_weights() {
        let p = baseline();
        let sched = Schedule::switch_off_at(28.32).unwrap();
        let u = Unraveling::new(&p, sched, Grid::new(5.0, 1e-3).unwrap()).unwrap();
        let master = (0..10_000u64)
            .find(|&m| u.trajectory(derive_seed(m, 0)).jump.is_none())
            .unwrap();
        let d = ensemble_density(&p, sched, 1, master, 5.0).unwrap();
        assert_eq!((d.p_no(), d.p_yes()), (1.0, 0.0));
        let norm: f64 = d.conditioned.unwrap().norm_sqr();
        assert!((norm - 1.0).abs() < 1e-12);
        let m = d.mixture();
        let tr: Complex64 = (0..5).map(|i| m[(i, i)]).sum();
        assert!((tr.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_ensemble_rejected() {
        assert_eq!(
            ensemble_density(&baseline(), Schedule::always_on(), 0, 1, 1.0).unwrap_err(),
            Error::EmptyEnsemble
        );
    }
}
