use thiserror::Error;

#[derive(Debug, Error)]
pub enum PmmError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid instance: {}", .0.join("; "))]
    InvalidInstance(Vec<String>),

    #[error("unknown {kind} id `{id}`")]
    UnknownId { kind: &'static str, id: String },

    #[error("phi and lambda are not compatible: {0}")]
    Incompatible(String),

    #[error("no feasible integral solution: {0}")]
    Infeasible(String),

    #[error("{what}: ground set of size {size} exceeds the enumeration cap {cap}")]
    EnumerationCap {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    /// A property that holds for every valid run was violated.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for PmmError {
    fn from(e: serde_json::Error) -> Self {
        PmmError::Parse(e.to_string())
    }
}

pub type Result<T, E = PmmError> = std::result::Result<T, E>;
