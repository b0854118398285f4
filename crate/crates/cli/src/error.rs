use std::fmt;

use geonas_core::Error as CoreError;

/// Failure with its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, flags or input files: exit 2.
    Input(String),
    /// Filesystem failure: exit 3.
    Io(String),
    /// An earlier stage's artifact is missing: exit 4.
    Missing(String),
    /// Training or search failed: exit 1.
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Run(_) => 1,
            Self::Input(_) => 2,
            Self::Io(_) => 3,
            Self::Missing(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(m) => write!(f, "input error: {m}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
            Self::Missing(m) => write!(f, "missing prerequisite: {m}"),
            Self::Run(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::Io(_) => Self::Io(msg),
            CoreError::Config(_)
            | CoreError::Range { .. }
            | CoreError::Dimension { .. }
            | CoreError::Parse { .. }
            | CoreError::Format(_)
            | CoreError::Json(_)
            | CoreError::Usage(_) => Self::Input(msg),
            _ => Self::Run(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
