use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("point ({r}, {s}) lies outside the derivative window")]
    OutOfWindow { r: f64, s: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("rejected: {0}")]
    Rejected(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
