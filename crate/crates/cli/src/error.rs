use std::io;

use dmfsense::Error as CoreError;
use thiserror::Error;

/// Process exit codes. Usage errors reported by the argument parser exit
/// with 2.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const IO: i32 = 1;
    pub const PARSE: i32 = 3;
    pub const CALIBRATION_OVERLAP: i32 = 4;
    pub const SCENARIO_COLLISION: i32 = 5;
    pub const SIMULATION: i32 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    /// Malformed or unresolvable input. `location` is `file:line:column`,
    /// a JSON path inside the document, or a stream line number.
    #[error("{location}: {message}")]
    Parse { location: String, message: String },

    #[error("calibration failed: {0}")]
    Overlap(CoreError),

    #[error("scenario error: {0}")]
    Collision(CoreError),

    #[error("simulation failed: {0}")]
    Simulation(CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => exit::IO,
            CliError::Parse { .. } => exit::PARSE,
            CliError::Overlap(_) => exit::CALIBRATION_OVERLAP,
            CliError::Collision(_) => exit::SCENARIO_COLLISION,
            CliError::Simulation(_) => exit::SIMULATION,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl ToString) -> Self {
        CliError::Parse {
            location: location.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::ClassOverlap { .. } => CliError::Overlap(e),
            CoreError::Collision { .. } => CliError::Collision(e),
            other => CliError::Simulation(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
