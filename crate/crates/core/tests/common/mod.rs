//! Shared generators for the integration suites.

#![allow(dead_code)]

use distsched_core::{ClusterState, Node, PodSpec, ScopeLevel, UsageLabel};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const BASE_LABELS: [&str; 5] = [
    "cpu-high-always",
    "cpu-low-spike",
    "memory-medium-gradual",
    "network-low-always",
    "storage-high-spike",
];

const NAMESPACES: [&str; 3] = ["default", "payments", "jobs"];
const APPLICATIONS: [&str; 2] = ["web", "api"];

/// Shape of a generated cluster.
#[derive(Clone)]
pub struct ClusterGen {
    pub nodes: std::ops::RangeInclusive<usize>,
    pub pods: std::ops::RangeInclusive<usize>,
    /// How many of [`BASE_LABELS`] to draw from.
    pub distinct_labels: usize,
    /// Vary namespace/application/scope per pod.
    pub mixed_scopes: bool,
    /// Chance a second label (different resource) is added to a pod.
    pub multi_label_probability: f64,
    /// Chance each pod starts assigned.
    pub assign_probability: f64,
}

impl Default for ClusterGen {
    fn default() -> Self {
        ClusterGen {
            nodes: 2..=8,
            pods: 0..=30,
            distinct_labels: 3,
            mixed_scopes: true,
            multi_label_probability: 0.0,
            assign_probability: 1.0,
        }
    }
}

pub fn random_pod(rng: &mut ChaCha8Rng, id: String, cfg: &ClusterGen) -> PodSpec {
    let primary: UsageLabel = BASE_LABELS[rng.gen_range(0..cfg.distinct_labels)]
        .parse()
        .unwrap();
    let mut labels = vec![primary];
    if rng.gen_bool(cfg.multi_label_probability) {
        let extra: UsageLabel = BASE_LABELS[rng.gen_range(0..BASE_LABELS.len())]
            .parse()
            .unwrap();
        if extra.resource != primary.resource {
            labels.push(extra);
        }
    }
    let (namespace, application, scope) = if cfg.mixed_scopes {
        (
            NAMESPACES[rng.gen_range(0..NAMESPACES.len())],
            APPLICATIONS[rng.gen_range(0..APPLICATIONS.len())],
            match rng.gen_range(0..3) {
                0 => ScopeLevel::Cluster,
                1 => ScopeLevel::Namespace,
                _ => ScopeLevel::Application,
            },
        )
    } else {
        ("default", "web", ScopeLevel::Cluster)
    };
    PodSpec::new(id, namespace, application, scope, labels).unwrap()
}

pub fn random_cluster(rng: &mut ChaCha8Rng, cfg: &ClusterGen) -> ClusterState {
    let node_count = rng.gen_range(cfg.nodes.clone());
    let nodes: Vec<Node> = (0..node_count)
        .map(|i| Node::new(format!("node-{i:02}")))
        .collect();
    let pod_count = rng.gen_range(cfg.pods.clone());
    let mut pods = Vec::new();
    let mut assignment = Vec::new();
    for p in 0..pod_count {
        let pod = random_pod(rng, format!("pod-{p:03}"), cfg);
        if rng.gen_bool(cfg.assign_probability) {
            let node = &nodes[rng.gen_range(0..node_count)];
            assignment.push((pod.id.clone(), node.id.clone()));
        }
        pods.push(pod);
    }
    ClusterState::new(nodes, pods, assignment).unwrap()
}

pub fn fixtures_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}
