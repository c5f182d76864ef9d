//! Library backing the `epirisk` binary: config parsing, table output, and
//! the command implementations. Kept as a library so integration tests can
//! drive commands directly as well as through the binary.

pub mod commands;
pub mod config;
pub mod table;

/// CLI error kinds, mapped to process exit codes: config errors exit 2,
/// numeric failures exit 3, validation-threshold failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
    /// Stdout closed by the reader (e.g. piping into `head`); not a failure.
    BrokenPipe,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BrokenPipe => 0,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::BrokenPipe => write!(f, "broken pipe"),
        }
    }
}

impl From<epirisk::Error> for CliError {
    fn from(e: epirisk::Error) -> Self {
        match e {
            epirisk::Error::NonConvergence(m) => CliError::Numeric(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            CliError::BrokenPipe
        } else {
            CliError::Io(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
