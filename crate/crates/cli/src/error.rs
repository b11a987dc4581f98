use std::fmt;

use cvrc_core::Error;

use crate::config::ConfigError;

/// A failed command, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameter values (exit 2).
    Usage(String),
    /// Missing, unreadable, malformed or unwritable files (exit 3).
    Io(String),
    /// Singular solve or non-converging iteration (exit 4).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    /// Wraps a library error with the stage it came from.
    pub fn from_core(stage: &str, e: Error) -> Self {
        let msg = format!("{stage}: {e}");
        match e {
            Error::Io(_) | Error::Format { .. } => CliError::Io(msg),
            e if e.is_numeric() => CliError::Numeric(msg),
            _ => CliError::Usage(msg),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(format!("config: {e}"))
    }
}

/// `.map_err` helper: `core(stage)` turns a library error into a
/// stage-qualified [`CliError`].
pub fn core(stage: &'static str) -> impl Fn(Error) -> CliError {
    move |e| CliError::from_core(stage, e)
}
