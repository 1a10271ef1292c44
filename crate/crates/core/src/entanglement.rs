//! Two-qubit reduced density operators and the Wootters concurrence.
//!
//! All matrices use the basis |0,0⟩, |0,1⟩, |1,0⟩, |1,1⟩, first slot
//! subsystem A.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::Serialize;

use crate::analytic::AmplitudeState;
use crate::error::{Error, Result};

/// Hermiticity and trace tolerance.
pub const DENSITY_TOLERANCE: f64 = 1e-12;
/// Most negative eigenvalue accepted (and clamped).
pub const EIGENVALUE_TOLERANCE: f64 = 1e-10;

/// Eigenvalues of ρ below this are treated as exact zeros when building
/// the concurrence; keeping them would add √ε noise.
const RANK_CUTOFF: f64 = 1e-13;

pub const IDX_00: usize = 0;
pub const IDX_01: usize = 1;
pub const IDX_10: usize = 2;
pub const IDX_11: usize = 3;

/// A validated 4×4 two-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitDensity(Matrix4<Complex64>);

impl TwoQubitDensity {
    pub fn new(m: Matrix4<Complex64>) -> Result<Self> {
        if m.iter().any(|z| !z.is_finite()) {
            return Err(Error::NotADensityMatrix("non-finite entry".into()));
        }
        let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > DENSITY_TOLERANCE {
            return Err(Error::NotADensityMatrix(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = m.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > DENSITY_TOLERANCE {
            return Err(Error::NotADensityMatrix(format!("trace {tr} differs from 1")));
        }
        let min = hermitian_part(&m).symmetric_eigenvalues().min();
        if min < -EIGENVALUE_TOLERANCE {
            return Err(Error::NotADensityMatrix(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self(m))
    }

    /// |ψ⟩⟨ψ| for a normalized vector.
    pub fn pure(psi: [Complex64; 4]) -> Result<Self> {
        let mut m = Matrix4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        Self::new(m)
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> Matrix4<Complex64> {
        self.0
    }

    /// Populations in basis order.
    pub fn diagonal(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|i| self.0[(i, i)].re)
    }
}

fn hermitian_part(m: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Single-excitation block: `first` on |1,0⟩, `second` on |0,1⟩, both
/// scaled by `scale`, the remaining weight on |0,0⟩.
pub(crate) fn single_excitation(first: Complex64, second: Complex64, scale: f64) -> Matrix4<Complex64> {
    let mut m = Matrix4::zeros();
    m[(IDX_10, IDX_10)] = (first.norm_sqr() * scale).into();
    m[(IDX_01, IDX_01)] = (second.norm_sqr() * scale).into();
    m[(IDX_10, IDX_01)] = first * second.conj() * scale;
    m[(IDX_01, IDX_10)] = first.conj() * second * scale;
    m[(IDX_00, IDX_00)] = (1.0 - (first.norm_sqr() + second.norm_sqr()) * scale).into();
    m
}

/// Atoms after tracing out both cavities. Subsystem A's excitation α sits
/// on |1,0⟩, B's γ on |0,1⟩; the rest, including the collapsed branch, on
/// |0,0⟩.
pub fn rho_atoms(state: &AmplitudeState) -> Result<TwoQubitDensity> {
    TwoQubitDensity::new(single_excitation(state.alpha, state.gamma, 1.0))
}

/// Cavity fields after tracing out both atoms (β on |1,0⟩, δ on |0,1⟩).
pub fn rho_cavities(state: &AmplitudeState) -> Result<TwoQubitDensity> {
    TwoQubitDensity::new(single_excitation(state.beta, state.delta, 1.0))
}

/// σ_y⊗σ_y, real and symmetric.
fn spin_flip() -> Matrix4<Complex64> {
    let mut s = Matrix4::zeros();
    s[(0, 3)] = (-1.0).into();
    s[(1, 2)] = 1.0.into();
    s[(2, 1)] = 1.0.into();
    s[(3, 0)] = (-1.0).into();
    s
}

/// Wootters concurrence max{0, √λ₁ − √λ₂ − √λ₃ − √λ₄}.
///
/// The √λᵢ are obtained directly as the singular values of XᵀΣX, where
/// ρ = XX† from the eigendecomposition of ρ and Σ = σ_y⊗σ_y. This avoids
/// the square root of eigenvalues of the non-Hermitian ρρ̃.
pub fn concurrence(rho: &TwoQubitDensity) -> f64 {
    let h = hermitian_part(&rho.0);
    let eig = h.symmetric_eigen();
    let mut x = Matrix4::<Complex64>::zeros();
    for k in 0..4 {
        let lam = eig.eigenvalues[k];
        if lam > RANK_CUTOFF {
            x.set_column(k, &(eig.eigenvectors.column(k) * Complex64::new(lam.sqrt(), 0.0)));
        }
    }
    let tau = x.transpose() * spin_flip() * x;
    let mut sv: Vec<f64> = tau.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    (sv[0] - sv[1] - sv[2] - sv[3]).clamp(0.0, 1.0)
}

/// The four λᵢ of ρ(σ_y⊗σ_y)ρ*(σ_y⊗σ_y), descending, from a complex Schur
/// decomposition. Residual imaginary parts and negatives down to −1e-10
/// are clamped; larger ones are an error.
pub fn wootters_eigenvalues(rho: &TwoQubitDensity) -> Result<[f64; 4]> {
    let s = spin_flip();
    let r = rho.0 * s * rho.0.conjugate() * s;
    let ev = r
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::NotADensityMatrix("spin-flip product has no Schur form".into()))?;
    let mut out = [0.0; 4];
    for (o, z) in out.iter_mut().zip(ev.iter()) {
        if z.im.abs() > EIGENVALUE_TOLERANCE || z.re < -EIGENVALUE_TOLERANCE {
            return Err(Error::NotADensityMatrix(format!("spin-flip eigenvalue {z}")));
        }
        *o = z.re.max(0.0);
    }
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// Concurrence from [`wootters_eigenvalues`]; cross-check for
/// [`concurrence`], accurate only to about √ε.
pub fn concurrence_from_eigenvalues(rho: &TwoQubitDensity) -> Result<f64> {
    let l = wootters_eigenvalues(rho)?.map(f64::sqrt);
    Ok((l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0))
}

/// 2|α||γ|.
pub fn concurrence_atoms_closed(state: &AmplitudeState) -> f64 {
    (2.0 * state.alpha.norm() * state.gamma.norm()).clamp(0.0, 1.0)
}

/// 2|β||δ|.
pub fn concurrence_cavities_closed(state: &AmplitudeState) -> f64 {
    (2.0 * state.beta.norm() * state.delta.norm()).clamp(0.0, 1.0)
}

/// Atom and cavity concurrences at one time, closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcurrencePair {
    pub t: f64,
    pub atoms: f64,
    pub cavities: f64,
}

impl From<&AmplitudeState> for ConcurrencePair {
    fn from(s: &AmplitudeState) -> Self {
        Self {
            t: s.t,
            atoms: concurrence_atoms_closed(s),
            cavities: concurrence_cavities_closed(s),
        }
    }
}
