use std::fmt;
use std::path::Path;

/// Failure of a command, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configuration or quadrature settings (exit 1).
    Usage(String),
    /// Output could not be written (exit 1).
    Io(String),
    /// The model itself has no answer here (exit 2).
    Domain(catsim::Error),
    /// At least one verification tolerance was breached (exit 3).
    Verification(usize),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Io(_) => 1,
            Self::Domain(_) => 2,
            Self::Verification(_) => 3,
        }
    }
}

impl From<catsim::Error> for CliError {
    fn from(e: catsim::Error) -> Self {
        if e.is_domain() {
            Self::Domain(e)
        } else {
            Self::Usage(e.to_string())
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "error: {m}"),
            Self::Io(m) => write!(f, "error: cannot write output: {m}"),
            Self::Domain(e) => write!(f, "model error: {e}"),
            Self::Verification(n) => write!(f, "verification failed: {n} check(s) out of tolerance"),
        }
    }
}
