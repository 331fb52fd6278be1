//! Pods, nodes, and the cluster state snapshot.
//!
//! [`ClusterState`] is a value-semantics snapshot: operations that "modify"
//! it either produce a new state or mutate under exclusive access. It is safe
//! to share read-only across threads; there is no internal locking.

use crate::error::{Error, Result};
use crate::model::label::{validate_name, ResourceKind, ScopeLevel, ScopedLabel, UsageLabel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};

/// A schedulable workload with its usage labels and spreading scope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PodDoc", into = "PodDoc")]
pub struct PodSpec {
    pub id: String,
    pub namespace: String,
    pub application: String,
    pub scope: ScopeLevel,
    /// At most one label per resource kind: a pod has one usage profile
    /// per resource.
    pub labels: BTreeSet<UsageLabel>,
    /// Whether the rebalancer may relocate this pod. Defaults to true.
    pub movable: bool,
}

impl PodSpec {
    pub fn new(
        id: impl Into<String>,
        namespace: impl Into<String>,
        application: impl Into<String>,
        scope: ScopeLevel,
        labels: impl IntoIterator<Item = UsageLabel>,
    ) -> Result<Self> {
        let pod = PodSpec {
            id: id.into(),
            namespace: namespace.into(),
            application: application.into(),
            scope,
            labels: labels.into_iter().collect(),
            movable: true,
        };
        pod.validate()?;
        Ok(pod)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidArgument("pod id is empty".to_string()));
        }
        validate_name("namespace", &self.namespace)?;
        validate_name("application", &self.application)?;
        let mut seen: BTreeMap<ResourceKind, UsageLabel> = BTreeMap::new();
        for &label in &self.labels {
            if let Some(prev) = seen.insert(label.resource, label) {
                return Err(Error::InvalidArgument(format!(
                    "pod {:?} carries two {} labels ({prev} and {label})",
                    self.id, label.resource
                )));
            }
        }
        Ok(())
    }

    /// Applies this pod's scope suffix to one of its base labels.
    pub fn scoped_label(&self, base: UsageLabel) -> Result<ScopedLabel> {
        if !self.labels.contains(&base) {
            return Err(Error::InvalidArgument(format!(
                "pod {:?} does not carry label {base}",
                self.id
            )));
        }
        Ok(self.scope_of(base))
    }

    /// All of this pod's labels, scoped.
    pub fn scoped_labels(&self) -> impl Iterator<Item = ScopedLabel> + '_ {
        self.labels.iter().map(|&base| self.scope_of(base))
    }

    fn scope_of(&self, base: UsageLabel) -> ScopedLabel {
        match self.scope {
            ScopeLevel::Cluster => ScopedLabel::cluster(base),
            ScopeLevel::Namespace => ScopedLabel::namespaced(base, self.namespace.clone()),
            ScopeLevel::Application => {
                ScopedLabel::application(base, self.namespace.clone(), self.application.clone())
            }
        }
    }
}

/// Wire form of a pod entry in snapshot files.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PodDoc {
    id: String,
    namespace: String,
    application: String,
    scope: ScopeLevel,
    labels: Vec<UsageLabel>,
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    movable: bool,
}

fn default_true() -> bool {
    true
}

#[allow(clippy::trivially_copy_pass_by_ref)]
fn is_true(v: &bool) -> bool {
    *v
}

impl TryFrom<PodDoc> for PodSpec {
    type Error = Error;

    fn try_from(doc: PodDoc) -> Result<PodSpec> {
        let mut pod = PodSpec::new(doc.id, doc.namespace, doc.application, doc.scope, doc.labels)?;
        pod.movable = doc.movable;
        Ok(pod)
    }
}

impl From<PodSpec> for PodDoc {
    fn from(pod: PodSpec) -> PodDoc {
        PodDoc {
            id: pod.id,
            namespace: pod.namespace,
            application: pod.application,
            scope: pod.scope,
            labels: pod.labels.into_iter().collect(),
            movable: pod.movable,
        }
    }
}

/// One cluster node, optionally capped at a maximum pod count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: String,
    /// Maximum number of assigned pods; absent means unlimited.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<u32>,
}

impl Node {
    pub fn new(id: impl Into<String>) -> Self {
        Node {
            id: id.into(),
            capacity: None,
        }
    }

    pub fn with_capacity(id: impl Into<String>, capacity: u32) -> Self {
        Node {
            id: id.into(),
            capacity: Some(capacity),
        }
    }
}

/// Nodes, pods, and the pod-to-node assignment.
///
/// Nodes are held in canonical order (ascending lexicographic by id), the
/// order used for every count vector and for tie-breaking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SnapshotDoc", into = "SnapshotDoc")]
pub struct ClusterState {
    nodes: Vec<Node>,
    pods: BTreeMap<String, PodSpec>,
    assignment: BTreeMap<String, String>,
}

impl ClusterState {
    pub fn new(
        nodes: impl IntoIterator<Item = Node>,
        pods: impl IntoIterator<Item = PodSpec>,
        assignment: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self> {
        let mut node_list: Vec<Node> = nodes.into_iter().collect();
        node_list.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in node_list.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::InvalidState(format!(
                    "duplicate node id {:?}",
                    pair[0].id
                )));
            }
        }

        let mut pod_map = BTreeMap::new();
        for pod in pods {
            pod.validate()?;
            let id = pod.id.clone();
            if pod_map.insert(id.clone(), pod).is_some() {
                return Err(Error::InvalidState(format!("duplicate pod id {id:?}")));
            }
        }

        let state = ClusterState {
            nodes: node_list,
            pods: pod_map,
            assignment: assignment.into_iter().collect(),
        };
        state.check_assignment()?;
        Ok(state)
    }

    pub fn empty(nodes: impl IntoIterator<Item = Node>) -> Result<Self> {
        ClusterState::new(nodes, [], [])
    }

    fn check_assignment(&self) -> Result<()> {
        for (pod_id, node_id) in &self.assignment {
            if !self.pods.contains_key(pod_id) {
                return Err(Error::InvalidState(format!(
                    "assignment references unknown pod {pod_id:?}"
                )));
            }
            if self.node_index(node_id).is_none() {
                return Err(Error::InvalidState(format!(
                    "pod {pod_id:?} is assigned to unknown node {node_id:?}"
                )));
            }
        }
        for (idx, count) in self.assigned_counts().into_iter().enumerate() {
            let node = &self.nodes[idx];
            if let Some(cap) = node.capacity {
                if count > cap as usize {
                    return Err(Error::InvalidState(format!(
                        "node {:?} holds {count} pods, over its capacity {cap}",
                        node.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Nodes in canonical order.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_index(&self, node_id: &str) -> Option<usize> {
        self.nodes
            .binary_search_by(|n| n.id.as_str().cmp(node_id))
            .ok()
    }

    pub fn pods(&self) -> impl Iterator<Item = &PodSpec> {
        self.pods.values()
    }

    pub fn pod(&self, pod_id: &str) -> Option<&PodSpec> {
        self.pods.get(pod_id)
    }

    pub fn pod_count(&self) -> usize {
        self.pods.len()
    }

    pub fn assignment(&self) -> &BTreeMap<String, String> {
        &self.assignment
    }

    /// Node the pod is assigned to, if any.
    pub fn node_of(&self, pod_id: &str) -> Option<&str> {
        self.assignment.get(pod_id).map(String::as_str)
    }

    /// Number of assigned pods per node, in canonical order.
    pub fn assigned_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.nodes.len()];
        for node_id in self.assignment.values() {
            if let Some(idx) = self.node_index(node_id) {
                counts[idx] += 1;
            }
        }
        counts
    }

    /// True when one more pod fits on the node.
    pub fn has_room(&self, node_idx: usize, assigned_count: usize) -> bool {
        match self.nodes[node_idx].capacity {
            Some(cap) => assigned_count < cap as usize,
            None => true,
        }
    }

    /// Adds an unassigned pod.
    pub fn add_pod(&mut self, pod: PodSpec) -> Result<()> {
        pod.validate()?;
        if self.pods.contains_key(&pod.id) {
            return Err(Error::InvalidState(format!(
                "duplicate pod id {:?}",
                pod.id
            )));
        }
        self.pods.insert(pod.id.clone(), pod);
        Ok(())
    }

    /// Assigns a known, unassigned pod to a node, enforcing capacity.
    pub fn assign(&mut self, pod_id: &str, node_id: &str) -> Result<()> {
        if !self.pods.contains_key(pod_id) {
            return Err(Error::InvalidArgument(format!("unknown pod {pod_id:?}")));
        }
        let idx = self
            .node_index(node_id)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown node {node_id:?}")))?;
        if let Some(current) = self.assignment.get(pod_id) {
            return Err(Error::InvalidArgument(format!(
                "pod {pod_id:?} is already assigned to node {current:?}"
            )));
        }
        let count = self
            .assignment
            .values()
            .filter(|n| n.as_str() == node_id)
            .count();
        if !self.has_room(idx, count) {
            return Err(Error::InvalidArgument(format!(
                "node {node_id:?} is at capacity {}",
                self.nodes[idx].capacity.unwrap_or_default()
            )));
        }
        self.assignment
            .insert(pod_id.to_string(), node_id.to_string());
        Ok(())
    }

    /// Removes a pod's assignment, returning the node it was on.
    pub fn unassign(&mut self, pod_id: &str) -> Result<String> {
        self.assignment.remove(pod_id).ok_or_else(|| {
            Error::InvalidArgument(format!("pod {pod_id:?} is not assigned to any node"))
        })
    }

    /// Stable fingerprint of the full snapshot, used to guard decisions
    /// against being applied to a state other than the one they were
    /// scored on.
    pub fn fingerprint(&self) -> String {
        let doc = SnapshotDoc::from(self.clone());
        let canonical = serde_json::to_string(&doc).expect("snapshot serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in &digest[..8] {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}

/// Wire form of a cluster snapshot file.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotDoc {
    nodes: Vec<Node>,
    pods: Vec<PodSpec>,
    #[serde(default)]
    assignment: BTreeMap<String, String>,
}

impl TryFrom<SnapshotDoc> for ClusterState {
    type Error = Error;

    fn try_from(doc: SnapshotDoc) -> Result<ClusterState> {
        ClusterState::new(doc.nodes, doc.pods, doc.assignment)
    }
}

impl From<ClusterState> for SnapshotDoc {
    fn from(state: ClusterState) -> SnapshotDoc {
        SnapshotDoc {
            nodes: state.nodes,
            pods: state.pods.into_values().collect(),
            assignment: state.assignment,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(s: &str) -> UsageLabel {
        s.parse().unwrap()
    }

    fn pod(id: &str, labels: &[&str]) -> PodSpec {
        PodSpec::new(
            id,
            "default",
            "app",
            ScopeLevel::Cluster,
            labels.iter().map(|l| label(l)),
        )
        .unwrap()
    }

    #[test]
    fn nodes_are_canonically_ordered() {
        let state = ClusterState::empty([Node::new("b"), Node::new("a"), Node::new("c")]).unwrap();
        let ids: Vec<&str> = state.nodes().iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(state.node_index("b"), Some(1));
        assert_eq!(state.node_index("z"), None);
    }

    #[test]
    fn duplicate_node_id_is_rejected() {
        let err = ClusterState::empty([Node::new("a"), Node::new("a")]).unwrap_err();
        assert!(err.to_string().contains("\"a\""), "{err}");
    }

    #[test]
    fn assignment_to_unknown_node_is_rejected() {
        let err = ClusterState::new(
            [Node::new("a")],
            [pod("p1", &["cpu-high-always"])],
            [("p1".to_string(), "ghost".to_string())],
        )
        .unwrap_err();
        assert!(err.to_string().contains("ghost"), "{err}");
    }

    #[test]
    fn assignment_of_unknown_pod_is_rejected() {
        let err = ClusterState::new(
            [Node::new("a")],
            [],
            [("nope".to_string(), "a".to_string())],
        )
        .unwrap_err();
        assert!(err.to_string().contains("nope"), "{err}");
    }

    #[test]
    fn capacity_violation_is_rejected() {
        let err = ClusterState::new(
            [Node::with_capacity("a", 1)],
            [pod("p1", &["cpu-high-always"]), pod("p2", &["cpu-high-always"])],
            [
                ("p1".to_string(), "a".to_string()),
                ("p2".to_string(), "a".to_string()),
            ],
        )
        .unwrap_err();
        assert!(err.to_string().contains("capacity"), "{err}");
    }

    #[test]
    fn one_label_per_resource() {
        let err = PodSpec::new(
            "p",
            "default",
            "app",
            ScopeLevel::Cluster,
            [label("cpu-high-always"), label("cpu-low-spike")],
        )
        .unwrap_err();
        assert!(err.to_string().contains("two cpu labels"), "{err}");
    }

    #[test]
    fn scoped_label_requires_membership() {
        let p = pod("p", &["cpu-high-always"]);
        assert!(p.scoped_label(label("cpu-high-always")).is_ok());
        assert!(p.scoped_label(label("memory-low-spike")).is_err());
    }

    #[test]
    fn scope_levels_render_through_pod() {
        let base = label("cpu-low-spike");
        let mut p = PodSpec::new(
            "p",
            "payments",
            "gateway",
            ScopeLevel::Cluster,
            [base],
        )
        .unwrap();
        assert_eq!(p.scoped_label(base).unwrap().render(), "cpu-low-spike");
        p.scope = ScopeLevel::Namespace;
        assert_eq!(
            p.scoped_label(base).unwrap().render(),
            "cpu-low-spike-payments"
        );
        p.scope = ScopeLevel::Application;
        assert_eq!(
            p.scoped_label(base).unwrap().render(),
            "cpu-low-spike-payments-gateway"
        );
    }

    #[test]
    fn fingerprint_tracks_state_changes() {
        let mut state =
            ClusterState::new([Node::new("a"), Node::new("b")], [pod("p1", &["cpu-high-always"])], [])
                .unwrap();
        let before = state.fingerprint();
        assert_eq!(before, state.fingerprint());
        state.assign("p1", "a").unwrap();
        assert_ne!(before, state.fingerprint());
    }

    #[test]
    fn assign_enforces_capacity_and_uniqueness() {
        let mut state = ClusterState::new(
            [Node::with_capacity("a", 1), Node::new("b")],
            [pod("p1", &["cpu-high-always"]), pod("p2", &["cpu-high-always"])],
            [],
        )
        .unwrap();
        state.assign("p1", "a").unwrap();
        assert!(state.assign("p1", "b").is_err(), "double assignment");
        assert!(state.assign("p2", "a").is_err(), "capacity");
        state.assign("p2", "b").unwrap();
        assert_eq!(state.assigned_counts(), vec![1, 1]);
        assert_eq!(state.unassign("p2").unwrap(), "b");
        assert!(state.unassign("p2").is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let state = ClusterState::new(
            [Node::with_capacity("10.0.0.2", 5), Node::new("10.0.0.1")],
            [pod("p1", &["cpu-high-always", "memory-low-gradual"])],
            [("p1".to_string(), "10.0.0.1".to_string())],
        )
        .unwrap();
        let json = serde_json::to_string_pretty(&state).unwrap();
        let back: ClusterState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, state);
    }

    #[test]
    fn snapshot_rejects_unknown_fields() {
        let doc = r#"{"nodes":[{"id":"a","color":"red"}],"pods":[]}"#;
        assert!(serde_json::from_str::<ClusterState>(doc).is_err());
    }
}
