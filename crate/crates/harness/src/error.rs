use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{failed} of {total} traces failed; first: {first}")]
    Traces { failed: usize, total: usize, first: String },
    #[error("scoring error: {0}")]
    Score(String),
    #[error(transparent)]
    Core(#[from] stagger::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Process exit status: 1 for configuration problems, 2 for everything
    /// that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
