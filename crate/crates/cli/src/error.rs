use std::process::ExitCode;

use embedplan_core::engine::EngineError;
use embedplan_core::planner::PlanError;
use embedplan_core::SpecError;
use thiserror::Error;

/// Command failure, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or invalid input files.
    #[error("{0}")]
    Input(String),
    /// The model cannot be placed on the hierarchy.
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Internal(_) => 4,
        })
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::Infeasible { .. } | PlanError::Capacity { .. } => {
                CliError::Infeasible(e.to_string())
            }
            PlanError::TooManyTables { .. }
            | PlanError::Invalid { .. }
            | PlanError::OnChipBound { .. } => CliError::Input(e.to_string()),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::QueryLength { .. }
            | EngineError::IndexOutOfRange { .. }
            | EngineError::PlanMismatch(_) => CliError::Input(e.to_string()),
            EngineError::StoreCap { .. } => CliError::Infeasible(e.to_string()),
            EngineError::ShapeMismatch { .. } | EngineError::Cartesian(_) => {
                CliError::Internal(e.to_string())
            }
        }
    }
}
