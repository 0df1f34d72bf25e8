use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("qubit index {index} out of range for a {n_qubits}-qubit operator")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("{what} is not a valid density matrix")]
    NotADensity { what: String },

    #[error("operator is not a projector (idempotence residual {residual:.3e})")]
    NotAProjector { residual: f64 },

    #[error("outcome has zero probability (weight {weight:.3e})")]
    ZeroProbabilityOutcome { weight: f64 },

    #[error("parameter {name} = {value} outside [{min}, {max}]")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("witness {witness} expects {expected} settings per party, scenario has {found}")]
    ShapeMismatch {
        witness: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("setting or outcome index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("violation is not monotone in {param}: coarse samples {samples:?}")]
    NonMonotone { param: String, samples: Vec<bool> },

    #[error("{witness} is not violated by {family} even at {param} = 1")]
    NoViolation {
        witness: String,
        family: String,
        param: String,
    },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
