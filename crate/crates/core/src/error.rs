use std::path::PathBuf;

/// Errors produced by the certification toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not unitary: max |U†U - I| = {deviation:e} exceeds tolerance {tolerance:e}")]
    NotUnitary { deviation: f64, tolerance: f64 },

    #[error("state is not normalized: | ||v|| - 1 | = {deviation:e}")]
    NotNormalized { deviation: f64 },

    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("angle {angle} lies outside [-{half_width}, {half_width}]")]
    AngleOutOfDomain { angle: f64, half_width: f64 },

    #[error("MCMC convergence diagnostic failed: R-hat = {r_hat:.4} (threshold {threshold})")]
    NotConverged { r_hat: f64, threshold: f64 },

    #[error("eigensolver did not converge at dimension {0}")]
    EigenSolver(usize),

    #[error("phase solver did not converge: residual {residual:e}")]
    PhaseSolver { residual: f64 },

    #[error("target error probability is unreachable: per-query pass probability is 1")]
    Unreachable,

    #[error("infeasible bound parameters: {0}")]
    InfeasibleParameters(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("ratio undefined: tr(E rho) = 0")]
    UndefinedRatio,

    #[error("channel {index}: {source}")]
    Channel {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: malformed data: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
