use thiserror::Error;

use crate::ids::{ItemId, PersonId};

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by model construction, signal computation, metrics, ranking,
/// and the simulator. Input/schema problems and numerical failures are kept as
/// distinct variants so callers (notably the CLI) can map them to exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: no records to build from")]
    EmptyInput,

    #[error("duplicate vote for person {person} on item {item}")]
    DuplicateVote { person: PersonId, item: ItemId },

    #[error("invalid vote value {value} (expected -1, 0, or 1)")]
    InvalidValue { value: i64 },

    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("too few people ({people}) for clustering up to k={max_k}")]
    TooFewPeople { people: usize, max_k: usize },

    #[error("person {person} has no group label")]
    UnlabeledPerson { person: PersonId },

    #[error("unknown item {item}")]
    UnknownItem { item: ItemId },

    #[error("unknown viewer {viewer}")]
    UnknownViewer { viewer: PersonId },

    #[error("signal {name} required by the value model is missing")]
    MissingSignal { name: String },

    #[error("no authorship mapping supplied")]
    NoAuthorship,

    #[error("did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("degenerate distribution: ratings are constant")]
    DegenerateDistribution,

    #[error("expected at least two groups")]
    SingleGroup,

    #[error("group {group} has no incident edges")]
    EmptyGroupGraph { group: u32 },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("graph has no triangles")]
    NoTriangles,

    #[error("graph has unsigned edges; balance requires a fully signed graph")]
    UnsignedEdges,

    #[error("unknown motif {name}")]
    UnknownMotif { name: String },

    #[error("reports measure different metric sets: {details}")]
    MismatchedMetrics { details: String },

    #[error("invalid window: {message}")]
    InvalidWindow { message: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{file}:{line}: {message}")]
    Schema {
        file: String,
        line: u64,
        message: String,
    },

    #[error("invalid config: {message}")]
    InvalidConfig { message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical procedure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::DegenerateDistribution
        )
    }
}
