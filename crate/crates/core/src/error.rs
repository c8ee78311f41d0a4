use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// Variants are grouped by how a caller (and the CLI) should react: input
/// problems, numerical failures, and unsatisfied statistical checks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {rule}")]
    Invariant { path: String, rule: String },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("grid construction failed: {0}")]
    Grid(String),
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e}, tolerance {tolerance:.1e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("target disconnected: {0}")]
    Disconnected(String),
    #[error("walk failed: {0}")]
    Walk(String),
    #[error("point {re} + {im}i was swallowed by the hull")]
    Swallowed { re: f64, im: f64 },
    #[error("curve point collided with the real axis after mapping (index {index})")]
    Collision { index: usize },
    #[error("drift evaluation failed: {0}")]
    Drift(String),
    #[error("no samples")]
    NoSamples,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invariant(path: impl Into<String>, rule: impl Into<String>) -> Self {
        Error::Invariant {
            path: path.into(),
            rule: rule.into(),
        }
    }

    /// True for errors caused by malformed or inconsistent input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. } | Error::Invariant { .. } | Error::Unsupported(_) | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
