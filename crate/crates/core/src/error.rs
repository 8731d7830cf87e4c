use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid curriculum (course {course}): {reason}")]
    Curriculum { course: String, reason: String },

    #[error("prerequisite cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("infeasible generator parameters: {0}")]
    Generator(String),

    #[error("invalid archetype table: {0}")]
    Archetypes(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("calibration: {0}")]
    Calibration(String),

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
