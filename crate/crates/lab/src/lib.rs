//! Experiment runner for `rellich-core`: configuration and presets, report
//! emission (CSV, JSON, MANIFEST) and the acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod report;

pub use config::Config;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    /// Invalid configuration or an unknown preset.
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(rellich_core::error::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<rellich_core::error::Error> for LabError {
    fn from(e: rellich_core::error::Error) -> Self {
        match e {
            rellich_core::error::Error::UnknownPreset(name) => LabError::Config(format!("unknown preset `{name}`")),
            other => LabError::Core(other),
        }
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl LabError {
    /// Process exit status: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config(_) => 2,
            _ => 1,
        }
    }
}
