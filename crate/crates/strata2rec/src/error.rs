//! Crate-wide error type.
//!
//! The CLI maps these onto process exit codes: usage problems are handled
//! before this type is reached, data/configuration problems exit 2, and
//! mathematical inconsistencies exit 3.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("model error: {0}")]
    Model(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid stratum data: {0}")]
    Semantic(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("insufficient genus-1 data: degree {missing} required up to {horizon}")]
    InsufficientGenus1 { missing: u32, horizon: u32 },

    #[error("irreducible correlator: {0}")]
    IrreducibleCorrelator(String),

    #[error("assignment ({a},{b},{c}) infeasible at degree {degree}")]
    InfeasibleAssignment { a: u8, b: u8, c: u8, degree: u32 },

    #[error("underdetermined degree {degree}: rank {rank} < 3 among feasible equations")]
    Underdetermined { degree: u32, rank: usize },

    #[error("inconsistent system at degree {degree}, assignment ({a},{b},{c}): surplus equation violated by {discrepancy}")]
    Inconsistent { degree: u32, a: u8, b: u8, c: u8, discrepancy: String },
}

impl Error {
    /// CLI exit code class: 2 for data/config problems, 3 for violated
    /// mathematics.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Underdetermined { .. } | Error::Inconsistent { .. } => 3,
            _ => 2,
        }
    }
}
