use crate::fock::ModeLabel;
use thiserror::Error;

/// Errors surfaced by state construction, operators and protocol runs.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("state must contain at least one mode")]
    EmptyModes,

    #[error("cutoff must be at least 1 (got {0})")]
    CutoffTooSmall(usize),

    #[error("duplicate mode label {0}")]
    DuplicateMode(ModeLabel),

    #[error("mode {0} is not present in the state")]
    UnknownMode(ModeLabel),

    #[error("operation needs two distinct modes, got {0} twice")]
    SameMode(ModeLabel),

    #[error("states must share a cutoff (got {0} and {1})")]
    CutoffMismatch(usize, usize),

    #[error("mode sets are incompatible: {0}")]
    ModeMismatch(String),

    #[error("parameter `{name}` = {value} violates: {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("state is not normalized (|norm^2 - 1| = {deviation:.3e})")]
    Unnormalized { deviation: f64 },

    #[error(
        "quadrature grid captures only {captured:.6} of the outcome measure \
         (need >= {required}); increase half_width or points_per_axis"
    )]
    GridMass { captured: f64, required: f64 },

    #[error(
        "cutoff is inadequate for this squeezing: truncation leakage {leakage:.3e} \
         exceeds {limit:.1e}; raise the cutoff"
    )]
    CutoffInadequate { leakage: f64, limit: f64 },

    #[error("density matrix is not Hermitian (max |A - A^H| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix dimension {0} does not match mode layout dimension {1}")]
    DimensionMismatch(usize, usize),

    #[error("spectrum table must cover the frequency grid: {0}")]
    SpectrumCoverage(String),

    #[error("spectral weight outside the frequency window is {outside:.3e} (limit {limit:.1e})")]
    SpectrumLeakage { outside: f64, limit: f64 },

    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
