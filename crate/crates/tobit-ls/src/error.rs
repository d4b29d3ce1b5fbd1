//! Error type shared across the crate.

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter value violates its documented range (e.g. `phi <= 0`).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The dataset violates the model contract (lengths, censoring, rank).
    #[error("data error: {0}")]
    Data(String),

    /// A CSV input could not be parsed; `line` is 1-based and counts the header.
    #[error("csv error at line {line}: {msg}")]
    CsvParse { line: usize, msg: String },

    /// The optimizer could not make progress or was given a bad start.
    #[error("optimization failed: {0}")]
    Optimization(String),

    /// The observed information matrix is not positive definite.
    #[error("observed information is not positive definite (min eigenvalue {min_eigenvalue:.6e})")]
    SingularInformation { min_eigenvalue: f64 },

    /// A Monte Carlo cell exceeded its non-convergence budget.
    #[error("failure budget exceeded: {failures} of {replications} replications failed (budget {budget})")]
    FailureBudget {
        failures: usize,
        replications: usize,
        budget: usize,
    },

    /// Too many envelope replications failed to refit.
    #[error("envelope refits failed: {failures} of {replications} replications")]
    EnvelopeFailures {
        failures: usize,
        replications: usize,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for usage/contract errors, 1 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::Domain(_)
            | Error::Data(_)
            | Error::CsvParse { .. }
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::Optimization(_)
            | Error::SingularInformation { .. }
            | Error::FailureBudget { .. }
            | Error::EnvelopeFailures { .. } => 1,
        }
    }
}
