//! Model constants for the two cascaded atom-cavity subsystems.
//!
//! Every frequency and rate is expressed in units of the total cavity
//! bandwidth 𝒦 of subsystem A, and times in units of 1/𝒦, with ℏ = 1.
//! Raw inputs live in [`SubsystemParams`]; the effective Raman constants
//! obtained after adiabatic elimination of the excited state live in
//! [`DerivedParams`] and are always recomputed from the raw fields.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Subsystem};

/// Adequacy threshold for the Raman ratios g/Δ, Ω/Δ and the
/// spontaneous-emission weight. Advisory only.
pub const ADEQUACY_THRESHOLD: f64 = 0.05;

/// Raw physical parameters of one atom-cavity subsystem.
///
/// `g` and `omega_rabi` are coupling amplitudes and may carry a sign; the
/// remaining fields are rates and must be non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsystemParams {
    /// Atom-cavity coupling g.
    pub g: f64,
    /// Laser Rabi frequency Ω.
    pub omega_rabi: f64,
    /// Detuning Δ of laser and cavity from the excited state.
    pub detuning: f64,
    /// Output-mirror bandwidth κ.
    pub kappa: f64,
    /// Mirror absorption/scattering rate κ′.
    pub kappa_loss: f64,
    /// Dipole relaxation rate γ of the excited state to |0⟩.
    pub gamma: f64,
    /// Dipole relaxation rate γ′ of the excited state to |1⟩.
    pub gamma_prime: f64,
}

impl SubsystemParams {
    /// Subsystem without spontaneous emission (γ = γ′ = 0).
    pub fn new(g: f64, omega_rabi: f64, detuning: f64, kappa: f64, kappa_loss: f64) -> Self {
        Self {
            g,
            omega_rabi,
            detuning,
            kappa,
            kappa_loss,
            gamma: 0.0,
            gamma_prime: 0.0,
        }
    }

    pub fn with_spontaneous_emission(mut self, gamma: f64, gamma_prime: f64) -> Self {
        self.gamma = gamma;
        self.gamma_prime = gamma_prime;
        self
    }

    fn check(&self, which: Subsystem) -> Result<()> {
        let fields = [
            ("g", self.g),
            ("omega", self.omega_rabi),
            ("delta", self.detuning),
            ("kappa", self.kappa),
            ("kappa_loss", self.kappa_loss),
            ("gamma", self.gamma),
            ("gamma_prime", self.gamma_prime),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    name: format!("{name}_{which}"),
                });
            }
        }
        if self.detuning <= 0.0 {
            return Err(Error::NonPositiveDetuning {
                subsystem: which,
                value: self.detuning,
            });
        }
        for (name, value) in &fields[3..] {
            if *value < 0.0 {
                return Err(Error::NegativeRate {
                    name: format!("{name}_{which}"),
                    value: *value,
                });
            }
        }
        if self.kappa + self.kappa_loss <= 0.0 {
            return Err(Error::ZeroBandwidth(which));
        }
        Ok(())
    }
}

/// Effective constants of the Raman-coupled two-level model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Effective coupling ḡ = −gΩ/Δ.
    pub g_bar: f64,
    /// Laser Stark shift Δ′ = −Ω²/Δ.
    pub stark_laser: f64,
    /// Cavity Stark shift Δ̄ = −g²/Δ.
    pub stark_cavity: f64,
    /// Total cavity bandwidth 𝒦 = κ + κ′.
    pub big_k: f64,
    /// Output-mirror bandwidth κ (copied for convenience).
    pub kappa: f64,
    /// Mirror loss rate κ′ (copied for convenience).
    pub kappa_loss: f64,
    /// Γ = γ/Δ².
    pub gamma_eff: f64,
    /// Γ′ = γ′/Δ².
    pub gamma_eff_prime: f64,
}

impl DerivedParams {
    /// Pure substitution into the definitions; no validation.
    pub fn from_raw(raw: &SubsystemParams) -> Self {
        let d = raw.detuning;
        Self {
            g_bar: -raw.g * raw.omega_rabi / d,
            stark_laser: -raw.omega_rabi * raw.omega_rabi / d,
            stark_cavity: -raw.g * raw.g / d,
            big_k: raw.kappa + raw.kappa_loss,
            kappa: raw.kappa,
            kappa_loss: raw.kappa_loss,
            gamma_eff: raw.gamma / (d * d),
            gamma_eff_prime: raw.gamma_prime / (d * d),
        }
    }

    /// The same subsystem with the driving laser switched off (Ω = 0):
    /// the Raman coupling and the laser Stark shift vanish.
    pub fn laser_off(&self) -> Self {
        Self {
            g_bar: 0.0,
            stark_laser: 0.0,
            ..*self
        }
    }
}

/// Validated parameters of the cascaded pair.
///
/// Only constructible through [`SystemParams::new`] (or [`validate`]), so the
/// derived constants always agree with the raw ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    a: SubsystemParams,
    b: SubsystemParams,
    phi: f64,
    derived_a: DerivedParams,
    derived_b: DerivedParams,
}

impl SystemParams {
    /// Validates the raw fields, normalizes φ into [0, 2π) and derives the
    /// effective constants.
    pub fn new(a: SubsystemParams, b: SubsystemParams, phi: f64) -> Result<Self> {
        a.check(Subsystem::A)?;
        b.check(Subsystem::B)?;
        if !phi.is_finite() {
            return Err(Error::NonFinite { name: "phi".into() });
        }
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Ok(Self {
            a,
            b,
            phi,
            derived_a: DerivedParams::from_raw(&a),
            derived_b: DerivedParams::from_raw(&b),
        })
    }

    /// Two identical subsystems.
    pub fn symmetric(sub: SubsystemParams, phi: f64) -> Result<Self> {
        Self::new(sub, sub, phi)
    }

    pub fn a(&self) -> &SubsystemParams {
        &self.a
    }

    pub fn b(&self) -> &SubsystemParams {
        &self.b
    }

    pub fn subsystem(&self, which: Subsystem) -> &SubsystemParams {
        match which {
            Subsystem::A => &self.a,
            Subsystem::B => &self.b,
        }
    }

    /// Reflection/retardation phase φ in [0, 2π).
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn derived_a(&self) -> &DerivedParams {
        &self.derived_a
    }

    pub fn derived_b(&self) -> &DerivedParams {
        &self.derived_b
    }

    pub fn with_phi(&self, phi: f64) -> Result<Self> {
        Self::new(self.a, self.b, phi)
    }

    /// √(κ_a κ_b), the strength of the unidirectional cavity coupling.
    pub fn cascade_coupling(&self) -> f64 {
        (self.a.kappa * self.b.kappa).sqrt()
    }

    /// Re-runs validation on the raw fields. Idempotent.
    pub fn revalidate(&self) -> Result<Self> {
        Self::new(self.a, self.b, self.phi)
    }
}

/// Free-function form of [`SystemParams::new`].
pub fn validate(a: SubsystemParams, b: SubsystemParams, phi: f64) -> Result<SystemParams> {
    SystemParams::new(a, b, phi)
}

/// Raman-regime ratios of one subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsystemAdequacy {
    pub g_over_detuning: f64,
    pub omega_over_detuning: f64,
    /// (γ + γ′)/Δ.
    pub spontaneous_weight: f64,
}

/// Diagnostic report on how well the far-detuned Raman approximation holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdequacyReport {
    pub a: SubsystemAdequacy,
    pub b: SubsystemAdequacy,
    /// (γ_a + γ_a′)/Δ_a + (γ_b + γ_b′)/Δ_b; equals 2(γ + γ′)/Δ for
    /// identical subsystems.
    pub spontaneous_weight: f64,
    pub threshold: f64,
    /// True when any ratio exceeds [`ADEQUACY_THRESHOLD`].
    pub flagged: bool,
}

fn subsystem_adequacy(p: &SubsystemParams) -> SubsystemAdequacy {
    SubsystemAdequacy {
        g_over_detuning: p.g.abs() / p.detuning,
        omega_over_detuning: p.omega_rabi.abs() / p.detuning,
        spontaneous_weight: (p.gamma + p.gamma_prime) / p.detuning,
    }
}

/// Reports g/Δ, Ω/Δ and the spontaneous-emission weight. Never fails; the
/// flag is advisory and does not block simulation.
pub fn raman_adequacy(params: &SystemParams) -> AdequacyReport {
    let a = subsystem_adequacy(&params.a);
    let b = subsystem_adequacy(&params.b);
    let spontaneous_weight = a.spontaneous_weight + b.spontaneous_weight;
    let flagged = [
        a.g_over_detuning,
        a.omega_over_detuning,
        b.g_over_detuning,
        b.omega_over_detuning,
        spontaneous_weight,
    ]
    .iter()
    .any(|&r| r > ADEQUACY_THRESHOLD);
    AdequacyReport {
        a,
        b,
        spontaneous_weight,
        threshold: ADEQUACY_THRESHOLD,
        flagged,
    }
}
