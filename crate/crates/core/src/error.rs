use std::fmt;

use thiserror::Error;

/// A single invariant violation found while validating a model or scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Where the problem is, e.g. `source s1, context [a b]`.
    pub location: String,
    pub message: String,
}

impl Violation {
    pub fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown source: {0}")]
    UnknownSource(String),
    #[error("invalid token: {0}")]
    InvalidToken(String),
    #[error("invalid prefix: {0}")]
    InvalidPrefix(String),
    #[error("invalid hypothesis: {0}")]
    InvalidHypothesis(String),
    #[error("malformed scenario: {0}")]
    MalformedScenario(String),
    #[error("malformed results document: {0}")]
    MalformedResults(String),
    #[error("invalid model: {}", join_violations(.0))]
    InvalidModel(Vec<Violation>),
    #[error("search budget exceeded: more than {limit} node expansions")]
    BudgetExceeded { limit: u64 },
    #[error("space too large for oracle: {size} sequences exceeds cap {cap}")]
    SpaceTooLarge { size: u128, cap: u128 },
    #[error("empty reference")]
    EmptyReference,
    #[error("duplicate hypothesis: {0}")]
    DuplicateHypothesis(String),
    #[error("quality not in [0,1]: {0}")]
    UnboundedQuality(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// True for failures caused by hitting a work or size cap rather than bad data.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. } | Error::SpaceTooLarge { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
