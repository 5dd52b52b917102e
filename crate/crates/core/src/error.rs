use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("site {site} out of range for {n_spins} spins")]
    SiteOutOfRange { site: usize, n_spins: usize },

    #[error("state length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("configuration {config} out of range for dimension {dim}")]
    ConfigOutOfRange { config: usize, dim: usize },

    #[error("schedule parameter tau = {0} outside [0, 1]")]
    TauOutOfRange(f64),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("effective field magnitude {magnitude:e} is singular")]
    SingularField { magnitude: f64 },

    #[error("ground-state gap {gap:e} at tau = {tau} is below tolerance")]
    DegenerateGap { tau: f64, gap: f64 },

    #[error("exact steering refused for L = {n_spins} (limit {max_spins})")]
    ExactTooLarge { n_spins: usize, max_spins: usize },

    #[error("norm drift {drift:e} exceeds tolerance {tol:e}; tighten the integrator tolerances")]
    NormDrift { drift: f64, tol: f64 },

    #[error("step size {step:e} fell below the minimum at t = {t} (tau = {tau})")]
    StepUnderflow { t: f64, tau: f64, step: f64 },

    #[error("realization {index} (seed {seed}) failed: {source}")]
    Realization {
        seed: u64,
        index: usize,
        #[source]
        source: Box<Error>,
    },
}
