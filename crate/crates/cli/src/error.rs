use std::fmt;
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(weyl_core::Error),
    /// An oracle suite ran and found a discrepancy.
    CheckFailed(String),
    Io(PathBuf, std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::Core(_) => 2,
            CliError::CheckFailed(_) => 3,
            CliError::Io(..) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::CheckFailed(m) => write!(f, "check failed: {m}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<weyl_core::Error> for CliError {
    fn from(e: weyl_core::Error) -> Self {
        CliError::Core(e)
    }
}
