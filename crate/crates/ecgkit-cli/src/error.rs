//! Exit-code classification for command failures.
//!
//! Failure classes map to process exit codes: bad configuration is 2,
//! filesystem/transport trouble is 3, and data failing domain validation
//! is 4. Success is 0 and clap reports usage errors with its own code.

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_VALIDATION: u8 = 4;

/// An error carrying its exit class.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub source: anyhow::Error,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(source: impl Into<anyhow::Error>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            source: source.into(),
        }
    }

    pub fn io(source: impl Into<anyhow::Error>) -> Self {
        CliError {
            code: EXIT_IO,
            source: source.into(),
        }
    }

    pub fn validation(source: impl Into<anyhow::Error>) -> Self {
        CliError {
            code: EXIT_VALIDATION,
            source: source.into(),
        }
    }

    /// Prefix the error message with what was being worked on.
    pub fn context(mut self, message: String) -> Self {
        self.source = self.source.context(message);
        self
    }
}

impl From<ecgkit::Error> for CliError {
    fn from(err: ecgkit::Error) -> Self {
        match err {
            ecgkit::Error::Io(_) => CliError::io(err),
            _ => CliError::validation(err),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::io(err)
    }
}
