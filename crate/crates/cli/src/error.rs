use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Core(#[from] qsync_core::Error),
    #[error("I/O error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("sweep failed: none of the {0} grid points succeeded")]
    SweepFailed(usize),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// Process exit code: 2 config/schema, 3 truncation, 4 I/O, 5 sweep failure.
    pub fn exit_code(&self) -> i32 {
        use qsync_core::Error as E;
        match self {
            Self::Config(_) | Self::Schema(_) => 2,
            Self::Core(E::Truncation { .. }) => 3,
            Self::Core(
                E::InvalidParameter { .. }
                | E::UnknownPreset(_)
                | E::InvalidDimension(_)
                | E::InvalidState(_)
                | E::MissingColumn(_)
                | E::WindowTooShort { .. }
                | E::LayoutMismatch(_),
            ) => 2,
            Self::Core(_) => 1,
            Self::Io { .. } => 4,
            Self::SweepFailed(_) => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
