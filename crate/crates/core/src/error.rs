use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not skew-symmetric (A + A^T has norm {residual:e})")]
    NotSkew { residual: f64 },

    #[error("matrix is not positive definite (lambda_min = {lambda_min:e}, threshold {threshold:e})")]
    NotPositiveDefinite { lambda_min: f64, threshold: f64 },

    #[error("matrix is not orthogonal (||Q^T Q - I||_F = {residual:e})")]
    NotOrthogonal { residual: f64 },

    #[error("symmetric eigensolver did not converge within {iterations} iterations")]
    EigenNoConvergence { iterations: usize },

    #[error("matrix exponential overflowed (||A||_1 = {norm:e})")]
    ExpmOverflow { norm: f64 },

    #[error("Lyapunov operator is ill-conditioned (lambda_min = {lambda_min:e}, threshold {threshold:e})")]
    LyapunovConditioning { lambda_min: f64, threshold: f64 },

    #[error("base point is rank deficient (sigma_min = {sigma_min:e}, threshold {threshold:e})")]
    RankDeficient { sigma_min: f64, threshold: f64 },

    #[error("function value is not finite when perturbing entry ({row}, {col})")]
    FdNonFinite { row: usize, col: usize },

    #[error("metric factor condition number {condition:e} exceeds {limit:e}")]
    Conditioning { condition: f64, limit: f64 },

    #[error("state became non-finite at step {step}")]
    Divergence { step: usize },

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
