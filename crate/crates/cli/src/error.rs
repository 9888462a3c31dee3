use std::fmt;

use serde::Serialize;

use jdq_core::{Error, ParseError};

/// CLI failure, split by exit code: I/O problems exit 1, bad input exits 2.
#[derive(Debug)]
pub enum CliError {
    Io(String),
    Invalid(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Core(e) if e.is_io() => 1,
            _ => 2,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Invalid(_) => "invalid_input",
            CliError::Core(e) => match e {
                Error::ColorlessMesh | Error::Parse(ParseError::Colorless) => "colorless_mesh",
                Error::Parse(_) => "parse",
                Error::UndefinedMetrics => "undefined_metrics",
                Error::MeshMismatch => "mesh_mismatch",
                Error::DimensionMismatch { .. } => "dimension_mismatch",
                e if e.is_io() => "io",
                _ => "invalid_input",
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) | CliError::Invalid(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Core(e.into())
    }
}

/// Error body printed to stderr as JSON.
#[derive(Serialize)]
pub struct ErrorReport<'a> {
    pub schema: u32,
    pub status: &'static str,
    pub kind: &'a str,
    pub message: String,
}

impl<'a> ErrorReport<'a> {
    pub fn new(err: &'a CliError) -> Self {
        ErrorReport {
            schema: jdq_core::report::SCHEMA_VERSION,
            status: "error",
            kind: err.kind(),
            message: err.to_string(),
        }
    }
}
