use std::path::PathBuf;

/// Exit status for a failed verification suite or runtime failure.
pub const EXIT_FAILURE: i32 = 1;
/// Exit status for bad flags, config files or inputs.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Failed(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] orbitflow::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        use orbitflow::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            // rejected inputs, as opposed to failures while running
            CliError::Core(
                E::Invalid(_)
                | E::Shape { .. }
                | E::NotSymmetric { .. }
                | E::NotSkew { .. }
                | E::NotPositiveDefinite { .. }
                | E::NotOrthogonal { .. }
                | E::RankDeficient { .. }
                | E::Conditioning { .. },
            ) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
