//! Error type shared by every module in the crate.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong in the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside a function's mathematical domain.
    Domain { what: &'static str, value: f64 },
    /// Malformed or inconsistent input data (parse failures, size
    /// mismatches, unknown names). The string pinpoints the location.
    Input(String),
    /// One or more columns cannot be standardized (zero variance or norm).
    DegenerateColumns(Vec<String>),
    /// An iterative routine failed to converge; the string carries the
    /// iteration trace or the final residual.
    Numeric(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => {
                write!(f, "domain error: {what} (got {value})")
            }
            Error::Input(msg) => write!(f, "input error: {msg}"),
            Error::DegenerateColumns(names) => {
                write!(f, "degenerate columns (zero variance or norm):")?;
                for n in names {
                    write!(f, " {n}")?;
                }
                Ok(())
            }
            Error::Numeric(msg) => write!(f, "numeric error: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
