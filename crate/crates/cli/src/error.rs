use cqc_core::CqcError;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Config,
    Computation,
    ResourceGuard,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Computation => 3,
            ErrorKind::ResourceGuard => 4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub exit_code: i32,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        CliError { kind, exit_code: kind.exit_code(), message: message.into(), details: None }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Config, message)
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    /// Single-line JSON for standard error.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl From<CqcError> for CliError {
    fn from(e: CqcError) -> Self {
        let kind = match &e {
            CqcError::ResourceGuard { .. } | CqcError::TooManyQubits(_) | CqcError::LatticeTooSmall { .. } => {
                ErrorKind::ResourceGuard
            }
            CqcError::EmptyLattice(_)
            | CqcError::UnknownCoordinate(_)
            | CqcError::UnknownQubit(_)
            | CqcError::ConflictingRegion(_)
            | CqcError::GeometryDoesNotFit(_)
            | CqcError::InvalidSite(_)
            | CqcError::OutOfRange(_)
            | CqcError::InvalidChannel(_)
            | CqcError::Parse(_) => ErrorKind::Config,
            _ => ErrorKind::Computation,
        };
        CliError::new(kind, e.to_string())
    }
}
