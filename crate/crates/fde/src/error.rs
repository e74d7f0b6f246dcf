use fde_core::picard::SolveError;
use thiserror::Error;

/// Failure classes of a run, each with its own exit code.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliError {
    /// Unreadable or inconsistent configuration, bad flags. Exit 1.
    #[error("config error: {0}")]
    Config(String),
    /// The problem violates the retardation/advance condition, its boundary
    /// data does not cover the queried range, or a majorant is negative. Exit 2.
    #[error("validation error: {0}")]
    Validation(String),
    /// Iteration failed: no admissible window, no convergence, or a
    /// non-finite value. Exit 3.
    #[error("solver error: {0}")]
    Convergence(String),
    /// Reading the config or writing outputs failed. Exit 4.
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    /// Classifies a solver error, keeping its full message.
    pub fn from_solve(e: &SolveError, context: Option<&str>) -> CliError {
        let mut msg = e.to_string();
        if let Some(c) = context {
            msg.push_str("; ");
            msg.push_str(c);
        }
        match e.root() {
            SolveError::InvalidConfig(_) | SolveError::InvalidHorizon { .. } => CliError::Config(msg),
            SolveError::Validation(_) | SolveError::TailGap { .. } | SolveError::NegativeMajorant { .. } => {
                CliError::Validation(msg)
            }
            _ => CliError::Convergence(msg),
        }
    }
}
