use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("field shape mismatch: expected {expected} values, got {found}")]
    Shape { expected: usize, found: usize },

    #[error("bias field {field} G outside model window [{lo}, {hi}] G")]
    FieldOutOfWindow { field: f64, lo: f64, hi: f64 },

    #[error("invalid scattering model: {0}")]
    Scattering(String),

    #[error("coupling Rabi frequency is zero; dark-state ratio undefined")]
    ZeroCoupling,

    #[error("invalid pulse: {0}")]
    Pulse(String),

    #[error("write-in rejected: {0}")]
    WriteIn(String),

    #[error("negative column density {0}")]
    NegativeDensity(f64),

    #[error("numerical blow-up at step {step}: max |psi| = {max_abs}")]
    NonFinite { step: u64, max_abs: f64 },

    #[error("ground state did not converge after {iterations} iterations (last relative change {last_change:e})")]
    NotConverged { iterations: u64, last_change: f64 },

    #[error("center of mass undefined for a field with zero norm")]
    ZeroNorm,

    #[error("decay fit: {0}")]
    Fit(String),

    #[error("invalid timeline: {0}")]
    Timeline(String),

    #[error("config: {0}")]
    Config(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
