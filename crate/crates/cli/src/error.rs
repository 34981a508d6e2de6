use std::fmt;

use uvkit_core::Error;

/// Failure category, mapped one-to-one onto process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numerical,
    Invariant,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Input => 1,
            ErrorKind::Numerical => 2,
            ErrorKind::Invariant => 3,
        }
    }

    fn of(e: &Error) -> Self {
        match e {
            _ if e.is_numerical() => ErrorKind::Numerical,
            Error::UncoveredFaces(_) => ErrorKind::Invariant,
            _ => ErrorKind::Input,
        }
    }
}

/// A module error tagged with the pipeline stage and the input it concerned.
#[derive(Debug)]
pub struct PipelineError {
    pub stage: &'static str,
    pub input: String,
    pub kind: ErrorKind,
    pub source: Error,
}

impl PipelineError {
    pub fn new(stage: &'static str, input: impl Into<String>, source: Error) -> Self {
        PipelineError {
            stage,
            input: input.into(),
            kind: ErrorKind::of(&source),
            source,
        }
    }

    pub fn invariant(stage: &'static str, input: impl Into<String>, source: Error) -> Self {
        PipelineError {
            kind: ErrorKind::Invariant,
            ..PipelineError::new(stage, input, source)
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed on {}: {}", self.stage, self.input, self.source)
    }
}

impl std::error::Error for PipelineError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// Attaches stage and input to a core result.
pub(crate) trait Stage<T> {
    fn stage(self, stage: &'static str, input: &dyn fmt::Display) -> Result<T, PipelineError>;
}

impl<T> Stage<T> for Result<T, Error> {
    fn stage(self, stage: &'static str, input: &dyn fmt::Display) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(stage, input.to_string(), e))
    }
}

pub(crate) fn io_error(path: &std::path::Path, e: std::io::Error) -> Error {
    Error::InvalidArgument(format!("{}: {e}", path.display()))
}
