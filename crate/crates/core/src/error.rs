use thiserror::Error;

/// Errors raised by model fitting, prediction and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes of the supplied arrays do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A parameter or configuration value is out of its allowed range.
    #[error("invalid value: {0}")]
    Validation(String),

    /// A (study, arm) cell needed for fitting has no observations.
    #[error("no observations in the {study} study for arm {arm}")]
    EmptyCell { study: &'static str, arm: u8 },

    /// Input data parsed but does not have the expected layout.
    #[error("malformed data: {0}")]
    Data(String),

    /// Factorization or optimization failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Dimension(_) | Error::EmptyCell { .. } => 3,
            Error::Numerical(_) => 4,
            Error::Validation(_) | Error::Data(_) | Error::Io(_) => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_check(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension(format!("{what}: expected {expected}, got {got}")))
    }
}
