use thiserror::Error;

/// Errors produced by the simulator and the analysis tools.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter combination that the chain cannot be built with.
    #[error("configuration error: {0}")]
    Config(String),

    /// A frame, group or sequence whose length does not match what the stage expects.
    #[error("frame format error: {0}")]
    FrameFormat(String),

    /// NaN or infinite values reached a stage that requires finite inputs.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Randomized construction did not succeed within its restart budget.
    #[error("retries exhausted: {0}")]
    RetryExhausted(String),

    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller broke an API precondition (e.g. missing cache on a reuse iteration).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
