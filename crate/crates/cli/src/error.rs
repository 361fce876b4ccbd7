use thiserror::Error;
use wicklab_core::Error as CoreError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Failure of a run, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    /// `2` for invalid input, `3` for numerical failure, `4` for IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Core(e) => match e {
                CoreError::Argument(_)
                | CoreError::Dimension(_)
                | CoreError::Infeasible(_)
                | CoreError::Pole(_)
                | CoreError::Chart(_)
                | CoreError::ExcludedMode(_) => EXIT_CONFIG,
                CoreError::Stiffness(_)
                | CoreError::Overflow(_)
                | CoreError::Resolution(_)
                | CoreError::InsufficientData(_)
                | CoreError::Classification(_) => EXIT_NUMERIC,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
