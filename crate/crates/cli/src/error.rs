use std::path::PathBuf;

use adr_core::planner::PlannerError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: field `{field}`: {message}", path.display())]
    Parse { path: PathBuf, line: u64, field: String, message: String },
    #[error("{}:{line}: debris {id}: {message}", path.display())]
    InvalidRow { path: PathBuf, line: u64, id: usize, message: String },
    #[error(transparent)]
    Planner(#[from] PlannerError),
}

/// Process exit status of the `run` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Converged = 0,
    Failure = 1,
    InputError = 2,
    Infeasible = 3,
    NotConverged = 4,
}

impl CliError {
    pub fn exit_status(&self) -> ExitStatus {
        match self {
            CliError::Write { .. } => ExitStatus::Failure,
            CliError::Read { .. } | CliError::Parse { .. } | CliError::InvalidRow { .. } => ExitStatus::InputError,
            CliError::Planner(PlannerError::InvalidInput(_)) => ExitStatus::InputError,
            CliError::Planner(PlannerError::InfeasibleMission(_)) => ExitStatus::Infeasible,
            CliError::Planner(_) => ExitStatus::Failure,
        }
    }
}
