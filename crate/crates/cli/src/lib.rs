//! Problem-file ingestion, run orchestration and report emission around
//! `qoc-core`. The binary front end lives in `main.rs`; everything here is
//! callable directly so integration tests can exercise the full pipeline.

// validations use negated comparisons so NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod problem_file;
pub mod report;
pub mod runner;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("invalid problem file: {field}: {message}")]
    Validation { field: String, message: String },
    #[error(transparent)]
    Core(#[from] qoc_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code: 2 validation, 3 improvement failure, 4 bracket
    /// failure, 5 enumeration budget, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use qoc_core::Error as E;
        match self {
            CliError::Parse(_) | CliError::Validation { .. } => 2,
            CliError::Core(e) => match e {
                E::NoImprovement { .. } | E::MonotonicityFailure { .. } => 3,
                E::BracketFailure { .. } => 4,
                E::BudgetExceeded { .. } => 5,
                E::NonHermitian { .. }
                | E::NotSquare { .. }
                | E::EmptyOperator
                | E::DimensionMismatch { .. }
                | E::BadBounds { .. }
                | E::BadGrid { .. }
                | E::BadCap { .. }
                | E::NegativeBeta { .. }
                | E::StateNotNormalized { .. }
                | E::ControlOutOfBounds { .. }
                | E::NotOrthonormal { .. }
                | E::NotProjector { .. }
                | E::NotPositiveSemidefinite { .. }
                | E::BadLineSearch { .. } => 2,
                _ => 1,
            },
            CliError::Io(_) => 1,
        }
    }
}
