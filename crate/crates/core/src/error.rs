use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {n_qubits}-qubit state")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("eigenvalue {value:e} is below the PSD floor")]
    NegativeEigenvalue { value: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid gate targets: {0}")]
    InvalidTargets(String),

    #[error("{name} = {value} is outside [0, 1]")]
    RateOutOfRange { name: &'static str, value: f64 },

    #[error("qubits ({0}, {1}) are not ring neighbours")]
    NonAdjacentPair(usize, usize),

    #[error("ring size {0} is not supported (need an even number of qubits >= 2)")]
    UnsupportedRing(usize),

    #[error("parameter vector has length {got}, layout expects {expected}")]
    ParameterMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
