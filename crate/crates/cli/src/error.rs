use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] clusterwalk::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("reproduction mismatch: {0}")]
    Mismatch(String),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl CliError {
    /// 2 parameter error, 3 resource or cap, 4 invariant violation.
    pub fn exit_code(&self) -> ExitCode {
        use clusterwalk::Error as E;
        let code = match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Parameter(_) | E::OutOfRegion(_)) => 2,
            CliError::Core(E::Capacity(_) | E::GrowthCap { .. } | E::Supercritical { .. }) => 3,
            CliError::Io(_) => 3,
            CliError::Core(E::Invariant(_)) | CliError::Mismatch(_) => 4,
        };
        ExitCode::from(code)
    }
}
