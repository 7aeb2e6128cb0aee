use thiserror::Error;

use crate::expr::ExprError;
use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Two grid functions that must share a mesh do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("invalid problem: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    /// The constraint map is not submersive at the endpoint pair.
    #[error("constraint map is not regular at the endpoints (smallest singular value {sigma_min:e})")]
    Regularity { sigma_min: f64 },

    #[error("solver diverged: {0}")]
    Diverged(String),

    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| format!("{}: {}", v.path, v.message))
        .collect::<Vec<_>>()
        .join("; ")
}
