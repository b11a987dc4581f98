use thiserror::Error;

/// Errors produced by the numerical kernel, the reservoir engine and the
/// data pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear solve failed at pivot {pivot} (value {value:e}); system is singular or not positive definite")]
    Solver { pivot: usize, value: f64 },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NonConvergence { iterations: usize, estimate: f64 },

    #[error("malformed {format} data: {detail}")]
    Format { format: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(detail: impl Into<String>) -> Self {
        Error::InvalidArgument(detail.into())
    }

    pub(crate) fn format(format: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            format,
            detail: detail.into(),
        }
    }

    /// True for failures of the numerical routines (singular solves,
    /// non-converging iterations), as opposed to bad input or I/O.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Solver { .. } | Error::NonConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
