use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io { .. } => 2,
            RunError::Numerical(_) => 3,
        }
    }

    /// Classify a library error raised while running `stage`.
    pub fn from_core(stage: &str, e: hyperloc::Error) -> Self {
        if e.is_numerical() {
            RunError::Numerical(format!("{stage}: {e}"))
        } else {
            RunError::Config(format!("{stage}: {e}"))
        }
    }
}

/// `.ctx("stage")` on library results.
pub trait Context<T> {
    fn ctx(self, stage: &str) -> Result<T, RunError>;
}

impl<T> Context<T> for hyperloc::Result<T> {
    fn ctx(self, stage: &str) -> Result<T, RunError> {
        self.map_err(|e| RunError::from_core(stage, e))
    }
}
