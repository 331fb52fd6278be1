//! Placement by lowest post-placement distributedness.
//!
//! To place a pod, every node is scored by hypothetically assigning the pod
//! there and computing, for each of the pod's scoped labels, the
//! distributedness factor of the resulting count vector. The feasible node
//! with the lowest aggregate (sum over labels) wins.
//!
//! Candidates are compared on the exact integer numerator of the summed
//! variances rather than on the divided floats. The divisor is shared by
//! every candidate, so the argmin set is identical under both variance
//! conventions and ties are detected exactly; reported scores are still the
//! per-convention factors.

use crate::distributedness::{ssd_numerator, variance_of_counts, VarianceConvention};
use crate::error::{Error, Result};
use crate::exec;
use crate::model::{ClusterState, PodSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Post-placement score of one candidate node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeScore {
    pub node_id: String,
    pub feasible: bool,
    /// Sum of per-label post-placement factors; absent when infeasible.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub aggregate: Option<f64>,
    /// Post-placement factor per rendered scoped label.
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub per_label: BTreeMap<String, f64>,
    /// Why the node is infeasible, when it is.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

/// Outcome of scoring one pod against every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementDecision {
    pub pod: PodSpec,
    pub chosen_node: String,
    /// All scores, in canonical node order, for auditability.
    pub scores: Vec<NodeScore>,
    /// Fingerprint of the state this decision was scored against;
    /// [`apply`] refuses any other state.
    pub fingerprint: String,
}

impl PlacementDecision {
    pub fn pod_id(&self) -> &str {
        &self.pod.id
    }
}

/// Current count vectors for each of the pod's scoped labels, plus per-node
/// assigned totals. Shared by [`score_node`] and [`place`].
struct ScoringContext {
    /// (rendered scoped label, current counts) in label order.
    base: Vec<(String, Vec<u64>)>,
    assigned: Vec<usize>,
}

fn scoring_context(state: &ClusterState, pod: &PodSpec) -> Result<ScoringContext> {
    pod.validate()?;
    if pod.labels.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "pod {:?} carries no usage labels; labels must be applied before a scheduling request",
            pod.id
        )));
    }
    if let Some(node) = state.node_of(&pod.id) {
        return Err(Error::InvalidArgument(format!(
            "pod {:?} is already assigned to node {node:?}",
            pod.id
        )));
    }
    if let Some(existing) = state.pod(&pod.id) {
        if existing != pod {
            return Err(Error::InvalidArgument(format!(
                "a different pod with id {:?} already exists in the cluster",
                pod.id
            )));
        }
    }
    let base = pod
        .scoped_labels()
        .map(|scoped| {
            let v = crate::distributedness::count_vector(state, &scoped);
            (scoped.render(), v.counts)
        })
        .collect();
    Ok(ScoringContext {
        base,
        assigned: state.assigned_counts(),
    })
}

/// Scores one node: per-label factors of the hypothetical state with the pod
/// assigned there, plus the exact integer comparison key.
fn score_index(
    state: &ClusterState,
    ctx: &ScoringContext,
    idx: usize,
    convention: VarianceConvention,
) -> Result<(NodeScore, Option<u128>)> {
    let node = &state.nodes()[idx];
    if !state.has_room(idx, ctx.assigned[idx]) {
        return Ok((
            NodeScore {
                node_id: node.id.clone(),
                feasible: false,
                aggregate: None,
                per_label: BTreeMap::new(),
                reason: Some(format!(
                    "at capacity {} ({} pods assigned)",
                    node.capacity.unwrap_or_default(),
                    ctx.assigned[idx]
                )),
            },
            None,
        ));
    }
    let mut per_label = BTreeMap::new();
    let mut aggregate = 0.0;
    let mut key: u128 = 0;
    let mut hypothetical = Vec::new();
    for (rendered, counts) in &ctx.base {
        hypothetical.clear();
        hypothetical.extend_from_slice(counts);
        hypothetical[idx] += 1;
        key += ssd_numerator(&hypothetical);
        let factor = variance_of_counts(&hypothetical, convention)?;
        aggregate += factor;
        per_label.insert(rendered.clone(), factor);
    }
    Ok((
        NodeScore {
            node_id: node.id.clone(),
            feasible: true,
            aggregate: Some(aggregate),
            per_label,
            reason: None,
        },
        Some(key),
    ))
}

/// Scores a single candidate node for an unassigned pod without modifying
/// the state.
pub fn score_node(
    state: &ClusterState,
    pod: &PodSpec,
    node_id: &str,
    convention: VarianceConvention,
) -> Result<NodeScore> {
    let idx = state
        .node_index(node_id)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown node {node_id:?}")))?;
    let ctx = scoring_context(state, pod)?;
    Ok(score_index(state, &ctx, idx, convention)?.0)
}

/// Scores every node and picks the feasible one with the lowest aggregate.
///
/// Ties are broken by fewest assigned pods, then lexicographically smallest
/// node id. The input state is never modified.
pub fn place(
    state: &ClusterState,
    pod: &PodSpec,
    convention: VarianceConvention,
) -> Result<PlacementDecision> {
    let ctx = scoring_context(state, pod)?;
    let indices: Vec<usize> = (0..state.nodes().len()).collect();
    let scored = exec::map_collect(&indices, |&idx| score_index(state, &ctx, idx, convention));

    let mut scores = Vec::with_capacity(scored.len());
    let mut best: Option<(u128, usize, usize)> = None; // (key, assigned, idx)
    for (idx, result) in scored.into_iter().enumerate() {
        let (score, key) = result?;
        if let Some(key) = key {
            let candidate = (key, ctx.assigned[idx], idx);
            // Canonical iteration order makes a strict < on (key, assigned)
            // equivalent to the documented (key, assigned, node id) order.
            let better = match best {
                None => true,
                Some((bk, ba, _)) => (key, ctx.assigned[idx]) < (bk, ba),
            };
            if better {
                best = Some(candidate);
            }
        }
        scores.push(score);
    }

    let Some((_, _, chosen_idx)) = best else {
        return Err(Error::Unschedulable {
            pod: pod.id.clone(),
            reasons: scores
                .iter()
                .map(|s| {
                    (
                        s.node_id.clone(),
                        s.reason.clone().unwrap_or_else(|| "infeasible".to_string()),
                    )
                })
                .collect(),
        });
    };

    Ok(PlacementDecision {
        pod: pod.clone(),
        chosen_node: state.nodes()[chosen_idx].id.clone(),
        scores,
        fingerprint: state.fingerprint(),
    })
}

/// Applies a decision, producing the new state.
///
/// The decision must have been produced against exactly this state; a
/// fingerprint mismatch (including applying the same decision twice) is a
/// conflict.
pub fn apply(state: &ClusterState, decision: &PlacementDecision) -> Result<ClusterState> {
    let actual = state.fingerprint();
    if actual != decision.fingerprint {
        return Err(Error::StaleDecision {
            expected: decision.fingerprint.clone(),
            actual,
        });
    }
    let mut next = state.clone();
    if next.pod(decision.pod_id()).is_none() {
        next.add_pod(decision.pod.clone())?;
    }
    next.assign(decision.pod_id(), &decision.chosen_node)?;
    Ok(next)
}
