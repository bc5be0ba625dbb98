use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("index {index} out of range for blocklength {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("synthesis budget exceeded at depth {depth}: {what} requires {required}, allowed {allowed}")]
    Budget {
        what: &'static str,
        depth: usize,
        required: usize,
        allowed: usize,
    },

    #[error("infeasible chaining schedule: deficit of {deficit} positions ({detail})")]
    Infeasible { deficit: usize, detail: String },

    #[error("common message needs {requested} positions but at most {maximum} are available")]
    CommonCapacity { requested: usize, maximum: usize },

    #[error("message length mismatch for {stream}: expected {expected} bits, got {got}")]
    MessageLength {
        stream: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("inconsistent layer ordering: {0}")]
    LayerOrdering(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
