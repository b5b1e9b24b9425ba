use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
    #[error("unsupported norm kind: {0}")]
    UnsupportedKind(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("solver diverged: residual {residual:e} after {iterations} iterations (tol {tol:e})")]
    SolverDivergence {
        iterations: usize,
        residual: f64,
        tol: f64,
    },
    #[error("invalid value for {key}: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("gronwall hypothesis violated on window [{start}, {end}]: lhs {lhs:e} > rhs {rhs:e}")]
    HypothesisViolation {
        start: f64,
        end: f64,
        lhs: f64,
        rhs: f64,
    },
    #[error("series is missing recorded terms: {0}")]
    MissingTerms(String),
    #[error("series is not time-ordered at record {0}")]
    UnsortedSeries(usize),
    #[error("empty run set")]
    EmptySet,
    #[error("snapshot format: {0}")]
    Snapshot(String),
    #[error("{0}")]
    Runtime(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
