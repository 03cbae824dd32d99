use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("symbol {symbol} out of range for alphabet of size {k}")]
    SymbolOutOfRange { symbol: u32, k: u32 },

    #[error("word exhausted after {consumed} symbols")]
    Exhausted { consumed: usize },

    #[error("chain is not ergodic: {0}")]
    NotErgodic(String),

    #[error("stationary solve did not converge: residual {residual:e}")]
    NonConvergence { residual: f64 },

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
