use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("window [{have_lo}, {have_hi}] does not cover required range [{need_lo}, {need_hi}]")]
    WindowTooShort {
        need_lo: i64,
        need_hi: i64,
        have_lo: i64,
        have_hi: i64,
    },

    #[error("did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("energy {energy} is numerically an eigenvalue of the box")]
    AtEigenvalue { energy: f64 },

    #[error("numerical failure: {what} (achieved {achieved:e})")]
    Numerical { what: String, achieved: f64 },

    #[error("enumeration of {count} words exceeds the cap of {cap}; use a smaller N or radius")]
    TooManyWords { count: u128, cap: u128 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of numerical procedures as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. }
                | Error::Degenerate(_)
                | Error::AtEigenvalue { .. }
                | Error::Numerical { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
