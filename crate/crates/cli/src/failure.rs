//! Exit-code classification of errors.

use std::fmt;
use std::process::ExitCode;

pub enum Failure {
    /// Bad flags, bad configuration values.
    Usage(anyhow::Error),
    /// Unreadable or invalid input data, failed writes.
    Data(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Internal(_) => 3,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, err) = match self {
            Failure::Usage(e) => ("usage error", e),
            Failure::Data(e) => ("data error", e),
            Failure::Internal(e) => ("internal error", e),
        };
        write!(f, "{kind}: {err:#}")
    }
}

pub trait Classify<T> {
    fn usage(self) -> Result<T, Failure>;
    fn data(self) -> Result<T, Failure>;
    fn internal(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }

    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Data(e.into()))
    }

    fn internal(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Internal(e.into()))
    }
}
