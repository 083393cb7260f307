use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("invalid array: {0}")]
    InvalidArray(String),
    #[error("log of nonpositive value {value} at index {index}")]
    NonPositiveLog { index: usize, value: f64 },
    #[error("backward root must be scalar, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),
    #[error("gradient reversal strength must be >= 0, got {0}")]
    NegativeLambda(f64),
    #[error("non-finite function value at {name}[{index}]")]
    NonFiniteEvaluation { name: String, index: usize },
    #[error("invalid label: {0}")]
    InvalidLabel(String),
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("missing parameter {0}")]
    MissingParameter(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{what} diverged at iteration {iteration}: {detail}")]
    Diverged {
        what: &'static str,
        iteration: usize,
        detail: String,
    },
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("dataset row {row}: {msg}")]
    Dataset { row: usize, msg: String },
    #[error("checkpoint array {name}: {msg}")]
    Checkpoint { name: String, msg: String },
    #[error("raster: {0}")]
    Raster(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
