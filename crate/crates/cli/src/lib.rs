//! Scenario files, presets and artifact handling for the `fluxid` tool.

pub mod artifacts;
pub mod gnuplot;
pub mod presets;
pub mod run;
pub mod scenario;

pub use scenario::{MethodSelect, Override, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input: scenario, override, manifest or map file.
    #[error("{0}")]
    Invalid(String),
    /// Simulation or output failure.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Invalid(_) => 2,
            Self::Failed(_) => 3,
        }
    }
}
