//! Quote files and engine configuration.

mod config;
mod quotes;

use std::path::PathBuf;

pub use config::{validate_config, validate_policy, EngineConfig};
pub use quotes::{
    parse_quotes, DayCount, IrsStrip, Quote, QuoteFormat, QuoteSet, TENOR_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MarketDataError {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("malformed record at line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("unknown configuration key '{0}'")]
    UnknownKey(String),
    #[error("configuration value out of domain: {key} = {value}")]
    OutOfDomain { key: String, value: String },
    #[error("i/o error: {0}")]
    Io(String),
}
