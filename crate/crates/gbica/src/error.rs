//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input")]
    EmptyInput,

    #[error("distribution is not decomposable into independent components: {0}")]
    NotDecomposable(String),

    #[error("problem size exceeds configured limit: {0}")]
    SizeLimit(String),

    #[error("memory budget exceeded: {0}")]
    MemoryBudget(String),

    #[error("symbol {symbol} has no code (alphabet size {m})")]
    UnknownSymbol { symbol: u64, m: usize },

    #[error("bitstream ended unexpectedly")]
    TruncatedStream,

    #[error("corrupt stream: {0}")]
    CorruptStream(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
