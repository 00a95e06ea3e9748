//! Error type shared across the engine.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HmError {
    /// Malformed input text (config, rational literal, word, element).
    #[error("parse error: {0}")]
    Parse(String),

    /// A configured structure violates one of the validated laws.
    #[error("validation error: {0}")]
    Validation(String),

    /// Two operands belong to different algebras or strata.
    #[error("algebra mismatch: {0}")]
    AlgebraMismatch(String),

    /// A class or map was requested outside its configured domain.
    #[error("unconfigured: {0}")]
    Unconfigured(String),

    /// The supplied r-table does not cover a required level.
    #[error("r-table too small: requires l = {required}, has l_max = {available}")]
    RTableTooSmall { required: u32, available: u32 },

    /// Operation not defined by the model (e.g. star of two node-sector elements).
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// An element exceeded the configured term-count guard.
    #[error(
        "element blew past the term guard: {terms} terms > cap {cap} (raise HMCALC_MAX_TERMS)"
    )]
    TermGuard { terms: usize, cap: usize },

    /// Requested index outside a series truncation.
    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HmError>;
