//! Domain model: the label taxonomy, scope levels, pods, nodes, and the
//! cluster state every other module operates on.

mod cluster;
mod label;

pub use cluster::{ClusterState, Node, PodSpec};
pub use label::{
    validate_name, Magnitude, Pattern, ResourceKind, ScopeLevel, ScopedLabel, UsageLabel,
};
