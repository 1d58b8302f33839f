use thiserror::Error;

/// Driver-level failures, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config keys, or config values. Exit code 1.
    #[error("config error: {0}")]
    Config(String),
    /// Failed reads or writes, with path context. Exit code 1.
    #[error("io error: {0}")]
    Io(String),
    /// The solver or a norm evaluation broke down. Exit code 2.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A verified property was violated. Exit code 3.
    #[error("property violation: {0}")]
    Property(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Property(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
