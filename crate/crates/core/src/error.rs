use thiserror::Error;

/// Errors raised by the laboratory. Each variant maps to a stable kebab-case
/// name (see [`KdvError::name`]) that the CLI prints alongside the message.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KdvError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported Sobolev index s = {0} (supported range is [-1, 6])")]
    UnsupportedIndex(f64),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("singular frequency at rho = {rho}: |Delta| = {det_abs:e} below threshold")]
    SingularFrequency { rho: f64, det_abs: f64 },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("linear solver failure: {0}")]
    SolverFailure(String),

    #[error("Newton iteration diverged at time step {step}; blowup suspected")]
    BlowupSuspected { step: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("Picard map is not contractive (ratios >= 1 for 3 consecutive iterations, last at iteration {iteration})")]
    NonContractive { iteration: usize },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl KdvError {
    /// Module-level error name, stable across releases.
    pub fn name(&self) -> &'static str {
        match self {
            KdvError::InvalidArgument(_) => "invalid-argument",
            KdvError::UnsupportedIndex(_) => "unsupported-index",
            KdvError::OutOfRange(_) => "out-of-range",
            KdvError::SingularFrequency { .. } => "singular-frequency",
            KdvError::Internal(_) => "internal-error",
            KdvError::SolverFailure(_) => "solver-failure",
            KdvError::BlowupSuspected { .. } => "blowup-suspected",
            KdvError::NotApplicable(_) => "not-applicable",
            KdvError::NonContractive { .. } => "non-contractive",
            KdvError::NoConvergence { .. } => "no-convergence",
            KdvError::UndefinedRatio(_) => "undefined-ratio",
            KdvError::Serialization(_) => "serialization-error",
        }
    }
}

pub type Result<T> = std::result::Result<T, KdvError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(KdvError::InvalidArgument(msg.into()))
}
