use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{variable} = {value} is outside its range [{lo}, {hi}]")]
    Range {
        variable: String,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    TrainingDiverged { epoch: usize },

    #[error("duplicate observation at encoded point {0:?}")]
    DuplicatePoint(Vec<f64>),

    #[error("kernel matrix is not positive definite even with jitter {jitter:e}")]
    SingularKernel { jitter: f64 },

    #[error("degenerate field: ratio denominator magnitude {magnitude:e} below guard")]
    DegenerateField { magnitude: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("trial evaluation failed: {0}")]
    Evaluation(String),

    #[error("malformed input at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            found,
        })
    }
}
