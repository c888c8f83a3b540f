use serde::Serialize;
use warped_harmonic::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config {
        field: String,
        message: String,
    },
    /// A computation failed outright.
    Compute(Error),
    /// A computation finished but its verdict is a failure.
    Verification {
        command: String,
        message: String,
    },
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config { field, message } => write!(f, "invalid configuration at {field}: {message}"),
            CliError::Compute(e) => write!(f, "{e}"),
            CliError::Verification { command, message } => write!(f, "{command} failed: {message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(message) => CliError::Config {
                field: "config".into(),
                message,
            },
            other => CliError::Compute(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Compute(Error::from(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Compute(Error::Io(e.to_string()))
    }
}

/// Machine-readable form of an error.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Compute(Error::Rejected(_)) | CliError::Verification { .. } => EXIT_VERIFY,
            CliError::Compute(_) => EXIT_SOLVER,
        }
    }

    pub fn report(&self) -> ErrorReport {
        let (kind, field, message) = match self {
            CliError::Config { field, message } => ("config", Some(field.clone()), message.clone()),
            CliError::Compute(e) => ("compute", None, e.to_string()),
            CliError::Verification { command, message } => ("verification", Some(command.clone()), message.clone()),
        };
        ErrorReport {
            kind,
            field,
            message,
            exit_code: self.exit_code(),
        }
    }
}
