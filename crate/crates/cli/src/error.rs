use std::fmt;

use flowtube_core::io::IoError;
use flowtube_core::kinetics::KineticsError;
use flowtube_core::massspec::WorkflowError;
use flowtube_core::reactor::ReactorError;
use flowtube_core::simulate::SimulateError;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    /// Bad arguments, unreadable or malformed input.
    Input = 1,
    /// Physically inoperable design.
    Physical = 2,
    /// A fit did not converge.
    NonConvergence = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: ExitKind::Input,
            message: message.into(),
        }
    }

    pub fn physical(message: impl Into<String>) -> Self {
        Self {
            kind: ExitKind::Physical,
            message: message.into(),
        }
    }

    pub fn non_convergence(message: impl Into<String>) -> Self {
        Self {
            kind: ExitKind::NonConvergence,
            message: message.into(),
        }
    }

    pub fn code(&self) -> u8 {
        self.kind as u8
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::input(format!("io: {e}"))
    }
}

impl From<ReactorError> for CliError {
    fn from(e: ReactorError) -> Self {
        let msg = format!("reactor: {e}");
        match e {
            ReactorError::BackDiffusion { .. } | ReactorError::InfeasibleDesign { .. } => {
                CliError::physical(msg)
            }
            ReactorError::InvalidSpec(_) | ReactorError::SingularGeometry(_) => {
                CliError::input(msg)
            }
        }
    }
}

impl From<KineticsError> for CliError {
    fn from(e: KineticsError) -> Self {
        CliError::input(format!("kinetics: {e}"))
    }
}

impl From<SimulateError> for CliError {
    fn from(e: SimulateError) -> Self {
        CliError::input(format!("simulate: {e}"))
    }
}

impl From<WorkflowError> for CliError {
    fn from(e: WorkflowError) -> Self {
        let msg = format!("massspec: {e}");
        match e {
            WorkflowError::ReferenceFit(_) => CliError::non_convergence(msg),
            _ => CliError::input(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(format!("io: {e}"))
    }
}
