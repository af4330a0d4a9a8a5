use goflab_core::GofError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] GofError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("results file: {0}")]
    Schema(String),

    #[error("{0}")]
    Usage(String),

    #[error("{failed} of {total} scenario cells failed")]
    CellsFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit status: 2 for bad input, 1 for computational failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_input_error() => 2,
            CliError::Core(_) | CliError::CellsFailed { .. } => 1,
            CliError::Io { .. }
            | CliError::Config(_)
            | CliError::Schema(_)
            | CliError::Usage(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
