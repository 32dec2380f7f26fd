use thiserror::Error;

/// Errors raised by the normality tests, samplers and the simulation harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("DegenerateSample: {0}")]
    DegenerateSample(String),

    #[error("ZeroModulus: empirical characteristic function vanishes at t = {t}")]
    ZeroModulus { t: f64 },

    #[error("InvalidPoint: evaluation point t = {t} is not allowed")]
    InvalidPoint { t: f64 },

    #[error("TooSmall: {test} requires n >= {min}, got {n}")]
    TooSmall { test: &'static str, min: usize, n: usize },

    #[error("TooLarge: {test} requires n <= {max}, got {n}")]
    TooLarge { test: &'static str, max: usize, n: usize },

    #[error("UnsupportedAlpha: {0}")]
    UnsupportedAlpha(String),

    #[error("InvalidParameters: {0}")]
    InvalidParameters(String),

    #[error("ParseError at position {position}: {message} (expected {expected})")]
    Parse {
        position: usize,
        message: String,
        expected: String,
    },

    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),

    #[error("critical value table: {0}")]
    Table(String),

    #[error("replication {replication} of cell {cell} failed: {source}")]
    Replication {
        cell: String,
        replication: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
