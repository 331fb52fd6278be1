//! Greedy re-scheduling of already-placed pods.
//!
//! For clusters scheduled without distributedness in mind, the rebalancer
//! simulates relocating pods one by one: each visited pod is hypothetically
//! removed and re-scored on every feasible node, and the relocation that
//! most lowers the total distributedness is accepted. Passes repeat until a
//! full pass accepts nothing or a configured limit is hit.
//!
//! The output is a dry-run plan; applying it to live state is a separate,
//! explicit step.

use crate::distributedness::{rendered_count_map, variance_of_counts, VarianceConvention};
use crate::error::{Error, Result};
use crate::exec;
use crate::model::ClusterState;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Limits and acceptance threshold for one rebalance run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RebalanceConfig {
    /// Hard cap on accepted moves.
    #[serde(default = "default_max_moves")]
    pub max_moves: usize,
    /// Hard cap on passes over the pod list.
    #[serde(default = "default_max_passes")]
    pub max_passes: usize,
    /// Absolute decrease in total distributedness a move must exceed to be
    /// accepted. The default only filters float noise, so any strictly
    /// improving move is taken and equal-objective oscillation is impossible.
    #[serde(default = "default_min_improvement")]
    pub min_improvement: f64,
}

fn default_max_moves() -> usize {
    1000
}

fn default_max_passes() -> usize {
    10
}

fn default_min_improvement() -> f64 {
    1e-9
}

impl Default for RebalanceConfig {
    fn default() -> Self {
        RebalanceConfig {
            max_moves: default_max_moves(),
            max_passes: default_max_passes(),
            min_improvement: default_min_improvement(),
        }
    }
}

impl RebalanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_moves == 0 {
            return Err(Error::InvalidArgument("max_moves must be positive".into()));
        }
        if self.max_passes == 0 {
            return Err(Error::InvalidArgument("max_passes must be positive".into()));
        }
        if !(self.min_improvement >= 0.0) {
            return Err(Error::InvalidArgument(
                "min_improvement must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// One accepted relocation, with the objective before and after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Move {
    pub pod: String,
    pub from: String,
    pub to: String,
    pub total_before: f64,
    pub total_after: f64,
}

/// An ordered, replayable list of moves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RebalancePlan {
    pub initial_total: f64,
    pub final_total: f64,
    pub moves: Vec<Move>,
}

impl RebalancePlan {
    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }
}

/// Sum of distributedness factors over every scoped label present on an
/// assigned pod. The rebalancer's objective; an empty cluster scores 0.
pub fn total_distributedness(
    state: &ClusterState,
    convention: VarianceConvention,
) -> Result<f64> {
    total_from_counts(&rendered_count_map(state), convention)
}

/// Single canonical reduction from count vectors to the objective, shared by
/// [`total_distributedness`] and the move records so that replaying a plan
/// reproduces its totals bit for bit.
fn total_from_counts(
    counts: &BTreeMap<String, Vec<u64>>,
    convention: VarianceConvention,
) -> Result<f64> {
    let mut total = 0.0;
    for vector in counts.values() {
        total += variance_of_counts(vector, convention)?;
    }
    Ok(total)
}

/// Greedy hill-climb over single-pod relocations.
///
/// Pods are visited in descending contribution order (sum over the pod's
/// labels of the label's count on the pod's node, recomputed at the start of
/// each pass), ties by pod id. Candidate targets are compared on the exact
/// integer change of the summed variance numerators, so the accepted move is
/// independent of the variance convention and of evaluation order.
pub fn rebalance(
    state: &ClusterState,
    config: &RebalanceConfig,
    convention: VarianceConvention,
) -> Result<RebalancePlan> {
    config.validate()?;
    let node_count = state.nodes().len();
    let mut working = state.clone();
    let mut counts = rendered_count_map(&working);
    let initial_total = total_from_counts(&counts, convention)?;
    let divisor = if node_count > 0 {
        convention.count_divisor(node_count as u128) as f64
    } else {
        1.0
    };

    let mut current_total = initial_total;
    let mut moves: Vec<Move> = Vec::new();

    'passes: for _ in 0..config.max_passes {
        let mut accepted_in_pass = false;
        for pod_id in visit_order(&working, &counts) {
            if moves.len() >= config.max_moves {
                break 'passes;
            }
            let from_id = working.node_of(&pod_id).expect("visited pods are assigned");
            let from_idx = working.node_index(from_id).expect("assignment is valid");
            let from_id = from_id.to_string();
            let labels: Vec<String> = working
                .pod(&pod_id)
                .expect("visited pods exist")
                .scoped_labels()
                .map(|s| s.render())
                .collect();
            let assigned = working.assigned_counts();

            let indices: Vec<usize> = (0..node_count).collect();
            let deltas = exec::map_collect(&indices, |&target| {
                candidate_delta(&working, &counts, &labels, &assigned, from_idx, target)
            });

            // Most negative delta wins; ties prefer emptier targets, then
            // smaller node ids (canonical iteration order).
            let mut best: Option<(i128, usize, usize)> = None;
            for (target, delta) in deltas.into_iter().enumerate() {
                let Some(delta) = delta else { continue };
                let better = match best {
                    None => true,
                    Some((bd, ba, _)) => (delta, assigned[target]) < (bd, ba),
                };
                if better {
                    best = Some((delta, assigned[target], target));
                }
            }
            let Some((delta, _, target_idx)) = best else {
                continue;
            };
            if target_idx == from_idx || delta >= 0 {
                continue;
            }
            let decrease = (-delta) as f64 / divisor;
            if decrease <= config.min_improvement {
                continue;
            }

            let target_id = working.nodes()[target_idx].id.clone();
            working.unassign(&pod_id)?;
            working.assign(&pod_id, &target_id)?;
            for label in &labels {
                let vector = counts.get_mut(label).expect("label counted");
                vector[from_idx] -= 1;
                vector[target_idx] += 1;
            }
            debug_assert_eq!(counts, rendered_count_map(&working));

            let total_before = current_total;
            current_total = total_from_counts(&counts, convention)?;
            moves.push(Move {
                pod: pod_id,
                from: from_id,
                to: target_id,
                total_before,
                total_after: current_total,
            });
            accepted_in_pass = true;
        }
        if !accepted_in_pass {
            break;
        }
    }

    Ok(RebalancePlan {
        initial_total,
        final_total: current_total,
        moves,
    })
}

/// Assigned, movable pods in descending contribution order: pods sitting on
/// the node where their labels are most crowded move first, since those
/// relocations shrink the objective fastest.
fn visit_order(state: &ClusterState, counts: &BTreeMap<String, Vec<u64>>) -> Vec<String> {
    let mut order: Vec<(u64, String)> = state
        .pods()
        .filter(|pod| pod.movable)
        .filter_map(|pod| {
            let node_id = state.node_of(&pod.id)?;
            let idx = state.node_index(node_id)?;
            let contribution: u64 = pod
                .scoped_labels()
                .map(|s| counts.get(&s.render()).map_or(0, |v| v[idx]))
                .sum();
            Some((contribution, pod.id.clone()))
        })
        .collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    order.into_iter().map(|(_, id)| id).collect()
}

/// Exact integer change of the summed variance numerators if the pod moved
/// from `from_idx` to `target`, or None when the target has no room.
///
/// Shifting one unit from component a to component t changes a label's
/// numerator `n·Σx² − (Σx)²` by `2n(x_t − x_a + 1)`: the total count is
/// unchanged, only the two squares move.
fn candidate_delta(
    state: &ClusterState,
    counts: &BTreeMap<String, Vec<u64>>,
    labels: &[String],
    assigned: &[usize],
    from_idx: usize,
    target: usize,
) -> Option<i128> {
    if target == from_idx {
        return Some(0);
    }
    if !state.has_room(target, assigned[target]) {
        return None;
    }
    let n = state.nodes().len() as i128;
    let mut delta: i128 = 0;
    for label in labels {
        let vector = &counts[label];
        let x_target = vector[target] as i128;
        let x_from = vector[from_idx] as i128;
        delta += 2 * n * (x_target - x_from + 1);
    }
    Some(delta)
}

/// Replays a plan's moves, validating each against the evolving state.
pub fn apply_plan(state: &ClusterState, plan: &RebalancePlan) -> Result<ClusterState> {
    let mut next = state.clone();
    for (i, step) in plan.moves.iter().enumerate() {
        let actual = next.node_of(&step.pod);
        if actual != Some(step.from.as_str()) {
            return Err(Error::InvalidArgument(format!(
                "move {i}: pod {:?} is on {:?}, plan expects {:?}",
                step.pod,
                actual.unwrap_or("<unassigned>"),
                step.from
            )));
        }
        next.unassign(&step.pod)?;
        next.assign(&step.pod, &step.to)?;
    }
    Ok(next)
}
