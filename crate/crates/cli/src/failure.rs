use std::fmt;
use std::path::Path;

use pulasso::Error;

/// A failed command, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration values (exit 2).
    Usage(String),
    /// Input missing, unreadable or malformed (exit 3).
    Input(String),
    /// Group specification does not match the columns (exit 4).
    Groups(String),
    /// Label file is not 0/1 or lacks one of the classes (exit 5).
    Labels(String),
    /// Anything else (exit 1).
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Input(_) => 3,
            Failure::Groups(_) => 4,
            Failure::Labels(_) => 5,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Groups(m) | Failure::Labels(m) | Failure::Runtime(m) => {
                f.write_str(m)
            }
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::InvalidGroups(_) | Error::RankDeficient { .. } => Failure::Groups(m),
            Error::NonBinaryLabels(_) | Error::DegenerateLabels { .. } => Failure::Labels(m),
            Error::InvalidPrevalence(_) | Error::InvalidConfig(_) => Failure::Usage(m),
            _ => Failure::Runtime(m),
        }
    }
}

/// Tags read errors with the file they came from; parse and I/O problems
/// become input failures.
pub fn reading<T>(path: &Path, r: pulasso::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| match e {
        Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Parse(_) | Error::NonFinite(_) | Error::DimensionMismatch { .. } => {
            Failure::Input(format!("{}: {e}", path.display()))
        }
        other => match Failure::from(other) {
            Failure::Groups(m) => Failure::Groups(format!("{}: {m}", path.display())),
            Failure::Labels(m) => Failure::Labels(format!("{}: {m}", path.display())),
            f => f,
        },
    })
}

pub fn writing<T>(path: &Path, r: pulasso::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Runtime(format!("writing {}: {e}", path.display())))
}
