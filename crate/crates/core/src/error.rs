use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("singular Gram matrix: lambda_min = {lambda_min:.3e} below {threshold:.3e}")]
    SingularGram { lambda_min: f64, threshold: f64 },

    #[error("row {row} has zero norm; row-norm sampling undefined")]
    ZeroRow { row: usize },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("transition matrix is not diagonalizable: {0}")]
    NonDiagonalizable(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
