use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("shelf {shelf} has zero capacity")]
    ZeroCapacity { shelf: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid spin value {0} (expected +1 or -1)")]
    InvalidSpin(i8),

    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },

    #[error(
        "{n} qubits exceeds the simulator limit of {max} ({bytes} bytes of amplitudes required)"
    )]
    TooManyQubits { n: usize, max: usize, bytes: u128 },

    #[error("{n} variables is too many to enumerate (limit {max}); use sampling instead")]
    SpectrumTooLarge { n: usize, max: usize },

    #[error("shots must be at least 1")]
    ZeroShots,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
