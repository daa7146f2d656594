use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian: max |A - A^dag| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("operator is not positive semidefinite: min eigenvalue = {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("matrix is not unitary: max |U^dag U - 1| = {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    #[error("eigensolver failed: {0}")]
    EigenFailure(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("invalid detector model: {0}")]
    InvalidModel(String),

    #[error("invalid probe: {0}")]
    InvalidProbe(String),

    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("probability {value} outside [0,1] beyond tolerance")]
    ProbabilityOutOfRange { value: f64 },

    #[error("POVM element has (near-)zero trace")]
    ZeroTrace,

    #[error("conditioning on a null outcome: p = {0:.3e}")]
    NullOutcome(f64),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Process exit code for the CLI: 2 validation, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 4,
            Error::EigenFailure(_) | Error::SingularSystem(_) | Error::NullOutcome(_) => 3,
            _ => 2,
        }
    }
}
