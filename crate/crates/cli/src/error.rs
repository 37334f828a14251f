use ontorepair_core::network::NetworkError;
use ontorepair_core::preferences::PreferenceError;
use ontorepair_core::{DiagnosisError, OracleError, ParseError, ReasonerError, RepairError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Resource(String),
    /// The problem has no solution of the requested kind.
    #[error("{0}")]
    Unsolved(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Unsolved(_) => 1,
        }
    }

    pub fn read(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ReasonerError> for CliError {
    fn from(e: ReasonerError) -> Self {
        match e {
            ReasonerError::ResourceExceeded { .. } => CliError::Resource(e.to_string()),
            ReasonerError::UnknownSymbol(_) => CliError::Usage(e.to_string()),
            ReasonerError::NotElFragment => CliError::Unsolved(e.to_string()),
        }
    }
}

impl From<DiagnosisError> for CliError {
    fn from(e: DiagnosisError) -> Self {
        match e {
            DiagnosisError::Reasoner(r) => r.into(),
            DiagnosisError::ResourceExceeded { .. } => CliError::Resource(e.to_string()),
            _ => CliError::Unsolved(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Reasoner(r) => r.into(),
            OracleError::BadConfig(_) => CliError::Usage(e.to_string()),
            OracleError::NeverAnswered(_) => CliError::Unsolved(e.to_string()),
        }
    }
}

impl From<RepairError> for CliError {
    fn from(e: RepairError) -> Self {
        match e {
            RepairError::Reasoner(r) => r.into(),
            RepairError::Diagnosis(d) => d.into(),
            RepairError::Oracle(o) => o.into(),
            RepairError::InvalidProblem(_) | RepairError::Precondition(_) => CliError::Usage(e.to_string()),
            _ => CliError::Unsolved(e.to_string()),
        }
    }
}

impl From<PreferenceError> for CliError {
    fn from(e: PreferenceError) -> Self {
        match e {
            PreferenceError::Repair(r) => r.into(),
            PreferenceError::Reasoner(r) => r.into(),
            PreferenceError::Oracle(o) => o.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::Reasoner(r) => r.into(),
            NetworkError::Diagnosis(d) => d.into(),
            NetworkError::Repair(r) => r.into(),
            NetworkError::Oracle(o) => o.into(),
            NetworkError::NoRepairWithoutCorrectRemoval(_) => CliError::Unsolved(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}
