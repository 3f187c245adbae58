use thiserror::Error;

#[derive(Debug, Error)]
pub enum CarbonError {
    #[error("case file not found: {0}")]
    CaseNotFound(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unknown builtin case '{0}'")]
    UnknownBuiltin(String),
    #[error("singular network matrix: {0}")]
    SingularNetwork(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("solver internal error: {0}")]
    Solver(String),
    #[error("solution not KKT-consistent: {0}")]
    KktInconsistent(String),
    #[error("breakpoint straddled, reduce eps or move base point")]
    BreakpointStraddled,
    #[error("excessive degeneracy: {0}")]
    ExcessiveDegeneracy(String),
    #[error("imbalance above tolerance: {0}")]
    Imbalance(String),
    #[error("singular mixing system: {0}")]
    SingularMixing(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CarbonError {
    /// CLI exit code category: 1 for input/validation problems, 2 for
    /// numerical or I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CarbonError::CaseNotFound(_)
            | CarbonError::Parse(_)
            | CarbonError::Validation(_)
            | CarbonError::UnknownBuiltin(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CarbonError>;
