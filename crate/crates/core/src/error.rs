use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Dimension {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },

    #[error("degenerate mask: row {row} has every key masked")]
    DegenerateMask { row: usize },

    #[error("invalid state: {0}")]
    State(&'static str),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("index {index} out of range for {table} (size {size})")]
    Index {
        table: &'static str,
        index: usize,
        size: usize,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("schema error: missing column `{0}`")]
    Schema(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("metric undefined: {0}")]
    MetricUndefined(&'static str),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
