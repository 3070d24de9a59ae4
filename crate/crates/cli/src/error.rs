use lawprice_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("config error: {0}")]
    Config(String),
    #[error("audit failed: {0}")]
    AuditFailed(String),
}

impl CliError {
    /// 2 parse, 3 space mismatch, 4 flag violation, 5 solver or spec.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::AuditFailed(_) => 4,
            CliError::Core(e) => match e {
                CoreError::Parse(_)
                | CoreError::Io(_)
                | CoreError::UnknownDistribution(_)
                | CoreError::EmptyPayoff
                | CoreError::NonFinite { .. } => 2,
                CoreError::SpaceMismatch { .. } => 3,
                CoreError::FlagViolation(_) => 4,
                _ => 5,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
