use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("element is not hyperbolic")]
    NotHyperbolic,
    #[error("quasimorphism normalization mismatch: {0}")]
    NormalizationMismatch(String),
    #[error("shape verification failed: {0}")]
    ShapeMismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("oracle violation: {0}")]
    OracleViolation(String),
    #[error("iteration budget exceeded: {0}")]
    Budget(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

impl Error {
    /// Errors caused by bad input rather than by a bug or exhausted budget.
    pub fn is_precondition(&self) -> bool {
        !matches!(self, Error::Budget(_))
    }
}

pub type Result<T> = core::result::Result<T, Error>;
