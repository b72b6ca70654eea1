use std::io;
use std::path::PathBuf;

use efc_core::equilibrium::EquilibriumError;
use efc_core::measures::{MeasureError, ValidationReport};
use efc_core::rates::RateError;
use efc_core::simulator::SimulationError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("characteristics failed validation:\n{}", render_violations(.0))]
    Validation(Box<ValidationReport>),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Validation(_) => 2,
            Self::Numerical(_) => 3,
            Self::Io { .. } => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

fn render_violations(report: &ValidationReport) -> String {
    report
        .violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<RateError> for CliError {
    fn from(e: RateError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<SimulationError> for CliError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::Rate(e) => e.into(),
            other => Self::Config(other.to_string()),
        }
    }
}

impl From<EquilibriumError> for CliError {
    fn from(e: EquilibriumError) -> Self {
        match e {
            EquilibriumError::NotConverged { .. } | EquilibriumError::InvalidDistribution(_) => {
                Self::Numerical(e.to_string())
            }
            EquilibriumError::Rate(e) => e.into(),
            other => Self::Config(other.to_string()),
        }
    }
}
