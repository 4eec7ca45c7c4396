use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix must be square with finite entries: {0}")]
    InvalidMatrix(String),

    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("invalid tolerances: {0}")]
    InvalidTolerance(String),

    /// Smallest singular value fell under the relative rank cutoff.
    #[error("matrix is numerically singular (sigma_min/sigma_max = {ratio:e})")]
    Singular { ratio: f64 },

    #[error("matrix is not Hermitian (relative defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("matrix has a negative eigenvalue {value:e}")]
    NegativeEigenvalue { value: f64 },

    #[error("eigenvalue iteration did not converge")]
    ConvergenceFailure,

    /// The standing hypothesis [x x^dagger, theta1] = 0 is violated.
    #[error("commutator [N1, theta1] too large (relative defect {defect:e})")]
    CommutatorTooLarge { defect: f64 },

    #[error("x maps transported vector {index} to zero")]
    ZeroVector { index: usize },

    #[error("N2 = x^dagger x is not invertible")]
    SingularN2,

    #[error("vectors and duals are not biorthogonal (defect {defect:e})")]
    BiorthogonalityViolated { defect: f64 },

    #[error("nu values are degenerate at indices {0:?}")]
    DegenerateNu(Vec<usize>),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("metric is not Hermitian positive definite: {0}")]
    BadMetric(String),

    #[error("operator is not pseudo-hermitian for the metric (residual {residual:e})")]
    NotPseudoHermitian { residual: f64 },

    #[error("similar form T^-1 theta T is not Hermitian (defect {defect:e})")]
    SimilarFormNotHermitian { defect: f64 },

    #[error("q = {0} outside the admissible range")]
    QOutOfRange(f64),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
