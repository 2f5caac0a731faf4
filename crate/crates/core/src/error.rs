use thiserror::Error;

/// Errors raised by model construction, evaluation and estimation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate {index} is negative or not finite ({value})")]
    NegativeCoordinate { index: usize, value: f64 },
    #[error("weights are not on the unit simplex (sum {sum})")]
    OffSimplex { sum: f64 },
    #[error("spectral measure has no atoms")]
    EmptyAtoms,
    #[error("spectral constraint violated: {0}")]
    SpectralConstraint(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("dimension {0} exceeds the inclusion-exclusion limit of {max}", max = crate::dependence::MAX_SUBSET_DIMENSION)]
    DimensionOverflow(usize),
    #[error("subset must be non-empty and inside 1..={0}")]
    InvalidSubset(usize),
    #[error("at least {needed} samples are needed, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("model spec: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for malformed input documents, as opposed to numeric domain problems.
    pub fn is_spec_error(&self) -> bool {
        matches!(self, Error::Spec(_))
    }
}
