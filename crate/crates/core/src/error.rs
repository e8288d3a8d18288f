use thiserror::Error;

/// Errors raised by model construction, emulation and the iteration engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QPolicyError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("cannot amplitude-encode an all-zero vector")]
    ZeroNorm,

    #[error("negative entry {value} at index {index}; shift the vector before encoding")]
    NegativeEntry { index: usize, value: f64 },

    #[error("qubit {qubit} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },

    #[error("empty histogram")]
    EmptyHistogram,

    #[error("control-variate samples have zero variance")]
    DegenerateControlVariate,

    #[error("unknown variant `{0}`")]
    UnknownVariant(String),

    #[error("at least two series are required for a confidence interval, got {0}")]
    TooFewSeries(usize),

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, QPolicyError>;

pub(crate) fn invalid_arg(msg: impl Into<String>) -> QPolicyError {
    QPolicyError::InvalidArgument(msg.into())
}
