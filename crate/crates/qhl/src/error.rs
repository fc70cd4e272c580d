//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QhlError {
    /// Syntax error with source position (1-based line and column).
    #[error("{line}:{col}: syntax error: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },

    /// A declaration or AST invariant was violated.
    #[error("{0}")]
    Validation(String),

    /// Evaluation failed (unbound variable, missing range, bad reference).
    #[error("{0}")]
    Eval(String),

    /// Integer arithmetic left the 64-bit signed range.
    #[error("integer overflow in {0}")]
    Overflow(String),

    /// A numerically computed operator failed its tolerance check.
    #[error("{0}")]
    Numeric(String),

    /// A proof step does not match its rule schema.
    #[error("step {step}: rule {rule} mismatch: {detail}")]
    RuleMismatch {
        step: String,
        rule: String,
        detail: String,
    },
}

impl QhlError {
    pub fn eval(msg: impl Into<String>) -> Self {
        QhlError::Eval(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        QhlError::Validation(msg.into())
    }
}
