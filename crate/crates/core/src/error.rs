use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("tree shape d={d}, h={h}: {reason}")]
    InvalidShape { d: usize, h: u32, reason: String },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: u64, max: u64 },

    #[error("symbol {symbol} outside alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },

    #[error("expected {expected} leaves, got {got}")]
    LeafCount { expected: usize, got: usize },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("stationary distribution is not unique (kernel is not ergodic)")]
    AmbiguousStationary,

    #[error("below the Kesten-Stigum threshold: d*rho^2 = {value} <= 1")]
    BelowThreshold { value: f64 },

    #[error("geometric series diverges: alpha * q = {value} >= 1")]
    Divergent { value: f64 },

    #[error("observed leaves have zero probability under the channel")]
    ZeroLikelihood,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed memory state: {0}")]
    MalformedMemory(String),

    #[error("token stream invalid at position {position}: {reason}")]
    Token { position: usize, reason: String },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
