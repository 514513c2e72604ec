use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("square-root branch undefined at zero eigenvalue")]
    SqrtZeroEigenvalue,
    #[error("square root is not primary: two eigenvalue roots sum to zero")]
    SqrtNotPrimary,
    #[error("Sylvester equation singular; use quadrature route for S(x)")]
    SylvesterSingular,
    #[error("spectral parameter collides with eigenvalue of A")]
    SpectralCollision,
    #[error("S(x) ill-conditioned at x = {x}: condition number {cond:.3e}")]
    IllConditioned { x: f64, cond: f64 },
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("v(0, lambda) is singular at lambda = {re}{im:+}i (isolated exceptional point)")]
    IsolatedPoint { re: f64, im: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
