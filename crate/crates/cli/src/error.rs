use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{context}: {source}")]
    Lib { context: String, source: curvsal::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn lib(context: impl std::fmt::Display, source: curvsal::Error) -> Self {
        CliError::Lib { context: context.to_string(), source }
    }

    /// 1 for algorithmic failures, 2 for usage, input and I/O problems.
    pub fn exit_code(&self) -> i32 {
        use curvsal::Error as E;
        match self {
            CliError::Lib { source: E::Degenerate(_) | E::Training(_) | E::Classifier(_), .. } => 1,
            _ => 2,
        }
    }
}
