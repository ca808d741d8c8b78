use std::fmt;

use opforge_core::genbackend::GenError;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    Usage,
    Data,
    Backend,
    Incomplete,
}

impl Failure {
    pub fn exit_code(self) -> u8 {
        match self {
            Failure::Usage => 1,
            Failure::Data => 2,
            Failure::Backend => 3,
            Failure::Incomplete => 4,
        }
    }

    pub fn of_generation(e: &GenError) -> Failure {
        match e {
            GenError::InvalidRequest(_) | GenError::OverCap { .. } | GenError::BadConfig(_) => Failure::Usage,
            GenError::FileMissing(_) | GenError::Io(_) | GenError::Insufficient { .. } | GenError::TooManyMalformed { .. } => {
                Failure::Data
            }
            GenError::Transport { .. } | GenError::Service { .. } | GenError::Protocol(_) | GenError::WrongCount { .. } => {
                Failure::Backend
            }
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Failure,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn new(kind: Failure, error: impl Into<anyhow::Error>) -> Self {
        CliError { kind, error: error.into() }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError::new(Failure::Usage, anyhow::anyhow!("{msg}"))
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        CliError::new(Failure::Data, anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> u8 {
        self.kind.exit_code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        CliError::new(Failure::of_generation(&e), e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Tags an error with its failure class.
pub trait OrFail<T> {
    fn or_fail(self, kind: Failure) -> CliResult<T>;

    fn usage(self) -> CliResult<T>
    where
        Self: Sized,
    {
        self.or_fail(Failure::Usage)
    }

    fn data(self) -> CliResult<T>
    where
        Self: Sized,
    {
        self.or_fail(Failure::Data)
    }
}

impl<T, E: Into<anyhow::Error>> OrFail<T> for Result<T, E> {
    fn or_fail(self, kind: Failure) -> CliResult<T> {
        self.map_err(|e| CliError::new(kind, e))
    }
}
