use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. Rows are 1-based data rows (the
/// header is not counted); variable indices are 0-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("variable index {index} out of range for {p} variables")]
    IndexOutOfRange { index: usize, p: usize },

    #[error("bad header: {0}")]
    BadHeader(String),

    #[error("non-numeric value in row {row}, column '{column}'")]
    NonNumericCell { row: usize, column: String },

    #[error("missing value in row {row}, column '{column}'")]
    MissingValue { row: usize, column: String },

    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("need at least 2 observations")]
    TooFewRows,

    #[error("need at least 2 variables")]
    TooFewVariables,

    #[error("non-finite value in row {row}, column '{column}'")]
    NonFinite { row: usize, column: String },

    #[error("zero variance in column '{column}'")]
    ZeroVariance { column: String },

    #[error("need more observations than variables (n = {n}, p = {p})")]
    TooFewObservations { n: usize, p: usize },

    #[error("covariance is singular with a {dim}-dimensional null space; no unique relation")]
    DegenerateNullSpace { dim: usize },

    #[error("correlation {corr:.3e} is too close to zero to determine a slope sign")]
    SignUndefined { corr: f64 },

    #[error("smallest covariance eigenvalue is repeated; orthogonal direction is ambiguous")]
    AmbiguousDirection,

    #[error("coefficient of variable {index} is zero")]
    ZeroCoefficient { index: usize },

    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),

    #[error("fit is an exact relation; residual statistics are undefined")]
    ExactFit,

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("confidence level must lie strictly between 0 and 1, got {0}")]
    InvalidLevel(f64),

    #[error("replicate count must be at least 1")]
    NoReplicates,

    #[error("all {0} bootstrap replicates failed")]
    AllReplicatesFailed(usize),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}
