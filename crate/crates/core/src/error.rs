use thiserror::Error;

/// Which of the two cascaded subsystems a parameter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Subsystem {
    /// The source (upstream) atom-cavity pair.
    A,
    /// The target (downstream) atom-cavity pair.
    B,
}

impl std::fmt::Display for Subsystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Subsystem::A => f.write_str("a"),
            Subsystem::B => f.write_str("b"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("detuning of subsystem {subsystem} must be positive, got {value}")]
    NonPositiveDetuning { subsystem: Subsystem, value: f64 },

    #[error("rate `{name}` must be non-negative, got {value}")]
    NegativeRate { name: String, value: f64 },

    #[error("parameter `{name}` is not finite")]
    NonFinite { name: String },

    #[error("total cavity bandwidth of subsystem {0} is zero")]
    ZeroBandwidth(Subsystem),

    #[error("time must be a finite non-negative number, got {0}")]
    NegativeTime(f64),

    #[error("switch-off time must be finite and non-negative, got {0}")]
    InvalidSwitchOff(f64),

    #[error("time {t} precedes the switch-off time {tbar}")]
    TimeBeforeSwitchOff { t: f64, tbar: f64 },

    #[error("empty search window [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("invalid grid: t_max={t_max}, dt={dt}")]
    InvalidGrid { t_max: f64, dt: f64 },

    #[error("step {dt} too large for generator norm {norm} (dt*norm must be <= 0.1)")]
    StepTooLarge { dt: f64, norm: f64 },

    #[error("not a density matrix: {0}")]
    NotADensityMatrix(String),

    #[error("no-jump probability is zero; conditioned state undefined")]
    ZeroSurvivalProbability,

    #[error("null-click probability is zero; conditional state undefined")]
    ZeroNullClickProbability,

    #[error("detector efficiency must lie in [0, 1], got {0}")]
    InvalidEfficiency(f64),

    #[error("ensemble size must be at least 1")]
    EmptyEnsemble,
}

pub type Result<T> = std::result::Result<T, Error>;
