//! Crate-wide error type.

use crate::model::ResourceKind;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A label string did not match `<resource>-<magnitude>-<pattern>`.
    #[error("cannot parse label {text:?}: {problem}")]
    LabelParse { text: String, problem: String },

    /// A precondition on an operation's arguments was violated.
    #[error("{0}")]
    InvalidArgument(String),

    /// A cluster snapshot failed structural validation.
    #[error("invalid cluster state: {0}")]
    InvalidState(String),

    /// A usage series is too short to classify.
    #[error("{resource} series has {got} sample(s), classification needs at least 2")]
    InsufficientData { resource: ResourceKind, got: usize },

    /// A usage series is all zeros; no magnitude/pattern can be assigned.
    /// Callers that want idle pods labeled must opt in explicitly.
    #[error("{resource} series is all zeros and cannot be classified")]
    Unclassifiable { resource: ResourceKind },

    /// No feasible node exists for the pod being placed.
    #[error("pod {pod:?} is unschedulable: {}", format_reasons(reasons))]
    Unschedulable {
        pod: String,
        /// Per-node infeasibility reasons, in canonical node order.
        reasons: Vec<(String, String)>,
    },

    /// A decision or plan was produced against a different state.
    #[error("stale decision: state fingerprint is {actual}, decision was scored against {expected}")]
    StaleDecision { expected: String, actual: String },

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Attaches a file path to an error raised while reading or writing it.
    pub fn in_file(self, path: &std::path::Path) -> Error {
        Error::File {
            path: path.display().to_string(),
            source: Box::new(self),
        }
    }
}

fn format_reasons(reasons: &[(String, String)]) -> String {
    if reasons.is_empty() {
        return "cluster has no nodes".to_string();
    }
    reasons
        .iter()
        .map(|(node, why)| format!("{node}: {why}"))
        .collect::<Vec<_>>()
        .join("; ")
}
