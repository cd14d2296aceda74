use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure in realization with seed {seed}: {source}")]
    Numerical {
        seed: u64,
        #[source]
        source: thzris::Error,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl SimError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) => 2,
            SimError::Numerical { .. } => 3,
            SimError::Io(_) => 1,
        }
    }
}
