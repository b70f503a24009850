use thiserror::Error;

/// Errors raised by the entropic dynamics toolkit.
///
/// Variants split into input validation failures and numerical failures;
/// [`EdError::is_validation`] tells them apart for exit-code mapping.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EdError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("density not normalized: integral = {integral:.17e}")]
    NotNormalized { integral: f64 },
    #[error("density {value:.3e} below floor {floor:.3e} at cell {cell}")]
    BelowFloor { cell: usize, value: f64, floor: f64 },
    #[error("wave-function node at cell {cell} (rho = {value:.3e})")]
    Node { cell: usize, value: f64 },
    #[error("CFL bound violated: max|v| dt/dx = {ratio:.6} > {limit}")]
    Cfl { ratio: f64, limit: f64 },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("degenerate kernel: {0}")]
    Degenerate(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl EdError {
    /// True for errors caused by bad input rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            EdError::Invalid(_)
                | EdError::GridMismatch(_)
                | EdError::NotNormalized { .. }
                | EdError::EmptyEnsemble
                | EdError::Parse(_)
                | EdError::Io(_)
        )
    }
}

impl From<std::io::Error> for EdError {
    fn from(e: std::io::Error) -> Self {
        EdError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, EdError>;
