//! Failure type for the harness, mapping every error to a process exit code.

/// Anything that can go wrong while loading a config or running tasks.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The config violates the schema; `pointer` locates the offending
    /// element in JSON-pointer notation.
    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },
    /// Filesystem trouble outside the config itself.
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    /// A task's numerical machinery failed outright.
    #[error(transparent)]
    Core(#[from] imsg_core::Error),
}

impl CliError {
    pub fn config(pointer: impl Into<String>, message: impl Into<String>) -> CliError {
        CliError::Config {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> CliError {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// Exit code convention: 2 for config problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
