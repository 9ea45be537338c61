use thiserror::Error;

/// Errors raised by the solver and its tooling.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown tableau `{name}` (valid names: {valid})")]
    UnknownTableau { name: String, valid: String },

    #[error("invalid tableau: {0}")]
    InvalidTableau(String),

    #[error("tableau consistency violated in row {row}: {detail}")]
    Consistency { row: usize, detail: String },

    #[error("tableau parse error: {0}")]
    TableauParse(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-positive {quantity} ({value:e}) at {location}")]
    Positivity {
        quantity: &'static str,
        value: f64,
        location: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("elliptic solve did not converge after {iterations} Newton steps (residual history {history:?})")]
    SolverDiverged { iterations: usize, history: Vec<f64> },

    #[error("stage back-substitution residual {residual:e} exceeds {limit:e}")]
    BackSubstitution { residual: f64, limit: f64 },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
