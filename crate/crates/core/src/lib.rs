//! Simulation of two cascaded Raman-driven atom-cavity systems: closed-form
//! no-jump amplitudes, quantum-jump unraveling, two-qubit concurrence,
//! entanglement storage by laser switch-off, and null-click conditioning
//! under imperfect photodetection.
//!
//! Units: every rate and frequency is in units of the total cavity
//! bandwidth 𝒦 of subsystem A, time in 1/𝒦, ℏ = 1.

pub mod analytic;
pub mod cli;
pub mod config;
pub mod detection;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod numeric;
pub mod params;

pub use analytic::{amplitudes_driven, amplitudes_stored, evolve_protocol, find_tbar, AmplitudeState, Protocol, Schedule};
pub use error::{Error, Result, Subsystem};
pub use params::{SubsystemParams, SystemParams};
