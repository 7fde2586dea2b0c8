use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidVector(String),

    #[error("source spectrum is not majorized by the target spectrum")]
    NotMajorized,

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("states are not locally equivalent")]
    NotLocallyEquivalent,

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("branch {branch} ends with fidelity {fidelity} to the target")]
    BranchNotPure { branch: usize, fidelity: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Schmidt rank {0} exceeds 2")]
    RankTooHigh(usize),

    #[error("spectrum expansion needs {atoms} atoms, cap is {cap}")]
    TooLarge { atoms: f64, cap: usize },

    #[error("typical set is empty")]
    EmptyTypicalSet,
}

pub type Result<T> = std::result::Result<T, Error>;
