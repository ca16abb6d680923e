//! Experiment runner for `uam-core`: configuration files, CSV and binary
//! artifacts, parallel Monte Carlo and the `uam` command line.

pub mod config;
pub mod experiments;
pub mod io;

pub use config::ExperimentConfig;

/// Failure of a command, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(uam_core::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) => 2,
            SimError::Numerical(_) => 3,
            SimError::Io { .. } => 1,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<uam_core::Error> for SimError {
    fn from(e: uam_core::Error) -> Self {
        match e {
            uam_core::Error::Parameter { .. } | uam_core::Error::Shape { .. } | uam_core::Error::Empty(_) => {
                SimError::Config(e.to_string())
            }
            other => SimError::Numerical(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
