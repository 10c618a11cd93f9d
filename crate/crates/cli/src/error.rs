use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced by the command-line tool, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(#[source] qssm::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<qssm::Error> for CliError {
    /// Invalid parameters are configuration problems; everything else is numerical.
    fn from(e: qssm::Error) -> Self {
        use qssm::Error as E;
        match e {
            E::InvalidOrder(_)
            | E::QamTooSmall(_)
            | E::NotPowerOfTwo { .. }
            | E::InvalidParameter { .. }
            | E::InfeasibleAngles { .. }
            | E::ZeroTrials => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
