//! Library and IO failures exit 1; usage errors exit 2.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Compute(m) => f.write_str(m),
        }
    }
}

impl From<coset_chains::Error> for CliError {
    fn from(e: coset_chains::Error) -> Self {
        use coset_chains::Error as E;
        match e {
            // Malformed input rather than a failed computation.
            E::MarginMismatch(_)
            | E::InvalidPartition(_)
            | E::InvalidTable(_)
            | E::Parse(_)
            | E::UnknownDataset(_) => CliError::Usage(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
