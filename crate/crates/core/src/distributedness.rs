//! Per-node label count vectors and the variance-based distributedness
//! factor.
//!
//! For one scoped label, the count vector holds how many assigned pods carry
//! it on each node, in canonical node order. The distributedness factor of
//! that label is the variance of its count vector: lower means the label is
//! spread more evenly.
//!
//! Count vectors are integers, so their variance is computed from the exact
//! integer numerator `n·Σx² − (Σx)²` and divided once. This makes factors
//! independent of node-order permutations down to the last bit and lets the
//! scheduler compare candidate placements in exact integer arithmetic.

use crate::error::{Error, Result};
use crate::exec;
use crate::model::{ClusterState, ScopedLabel};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Divisor used by the variance formula.
///
/// The worked values this engine reproduces match the sample (n−1) divisor,
/// so that is the default; the population (1/n) form is available alongside.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceConvention {
    /// Divide by n−1. Requires at least two values.
    #[default]
    Sample,
    /// Divide by n.
    Population,
}

impl VarianceConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            VarianceConvention::Sample => "sample",
            VarianceConvention::Population => "population",
        }
    }

    /// Exact integer divisor for the count-vector variance numerator
    /// `n·Σx² − (Σx)²`, which equals `n²` times the population variance.
    pub(crate) fn count_divisor(self, n: u128) -> u128 {
        match self {
            VarianceConvention::Sample => n * (n - 1),
            VarianceConvention::Population => n * n,
        }
    }

    fn check_len(self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "variance of an empty series is undefined".to_string(),
            ));
        }
        if self == VarianceConvention::Sample && n < 2 {
            return Err(Error::InvalidArgument(
                "sample variance needs at least 2 values".to_string(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for VarianceConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VarianceConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample" => Ok(VarianceConvention::Sample),
            "population" => Ok(VarianceConvention::Population),
            other => Err(Error::InvalidArgument(format!(
                "unknown variance convention {other:?} (want \"sample\" or \"population\")"
            ))),
        }
    }
}

/// Variance of arbitrary real values under the given convention.
///
/// The input is order-normalized internally, so permutations of the same
/// values produce bit-identical results, and an all-equal series returns
/// exactly zero.
pub fn variance(values: &[f64], convention: VarianceConvention) -> Result<f64> {
    convention.check_len(values.len())?;
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return Ok(0.0);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let ssd: f64 = sorted
        .iter()
        .map(|&v| {
            let d = v - mean;
            d * d
        })
        .sum();
    let divisor = match convention {
        VarianceConvention::Sample => n - 1.0,
        VarianceConvention::Population => n,
    };
    Ok(ssd / divisor)
}

/// `n·Σx² − (Σx)²` over an integer count vector: `n²` times the population
/// variance, exact. Non-negative by the Cauchy-Schwarz inequality.
pub(crate) fn ssd_numerator(counts: &[u64]) -> u128 {
    let n = counts.len() as u128;
    let mut sum: u128 = 0;
    let mut sum_sq: u128 = 0;
    for &c in counts {
        let c = c as u128;
        sum += c;
        sum_sq += c * c;
    }
    n * sum_sq - sum * sum
}

/// Variance of an integer count vector, computed exactly up to the single
/// final division.
pub fn variance_of_counts(counts: &[u64], convention: VarianceConvention) -> Result<f64> {
    convention.check_len(counts.len())?;
    let numerator = ssd_numerator(counts);
    let divisor = convention.count_divisor(counts.len() as u128);
    Ok(numerator as f64 / divisor as f64)
}

/// Counts of one scoped label across all nodes, in canonical node order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelCountVector {
    pub scoped_label: ScopedLabel,
    pub counts: Vec<u64>,
}

impl LabelCountVector {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Per-node counts for one scoped label.
///
/// `counts[i]` is the number of assigned pods on node `i` (canonical order)
/// for which some base label, scoped per the pod's own scope level, renders
/// equal to `scoped`. Unassigned pods contribute nothing.
pub fn count_vector(state: &ClusterState, scoped: &ScopedLabel) -> LabelCountVector {
    let target = scoped.render();
    let mut counts = vec![0u64; state.nodes().len()];
    for_each_assigned_label(state, |idx, rendered| {
        if rendered == target {
            counts[idx] += 1;
        }
    });
    LabelCountVector {
        scoped_label: scoped.clone(),
        counts,
    }
}

/// Count vectors for every scoped label carried by an assigned pod, keyed by
/// rendered label.
pub(crate) fn rendered_count_map(state: &ClusterState) -> BTreeMap<String, Vec<u64>> {
    let node_count = state.nodes().len();
    let mut map: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for_each_assigned_label(state, |idx, rendered| {
        map.entry(rendered).or_insert_with(|| vec![0u64; node_count])[idx] += 1;
    });
    map
}

fn for_each_assigned_label(state: &ClusterState, mut visit: impl FnMut(usize, String)) {
    for pod in state.pods() {
        let Some(node_id) = state.node_of(&pod.id) else {
            continue;
        };
        let Some(idx) = state.node_index(node_id) else {
            continue;
        };
        for scoped in pod.scoped_labels() {
            visit(idx, scoped.render());
        }
    }
}

/// Variance of one scoped label's count vector.
pub fn distributedness_factor(
    state: &ClusterState,
    scoped: &ScopedLabel,
    convention: VarianceConvention,
) -> Result<f64> {
    variance_of_counts(&count_vector(state, scoped).counts, convention)
}

/// One report row: a label's count vector and its factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub counts: Vec<u64>,
    pub factor: f64,
}

/// Factors for every scoped label present on an assigned pod, in
/// lexicographic label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributednessReport {
    pub convention: VarianceConvention,
    pub labels: BTreeMap<String, ReportEntry>,
}

impl DistributednessReport {
    /// Plain-text table for terminals.
    pub fn to_table(&self, state: &ClusterState) -> String {
        let mut out = String::new();
        out.push_str(&format!("convention: {}\n", self.convention));
        let node_ids: Vec<&str> = state.nodes().iter().map(|n| n.id.as_str()).collect();
        out.push_str(&format!("nodes: {}\n", node_ids.join(", ")));
        if self.labels.is_empty() {
            out.push_str("(no labels on assigned pods)\n");
            return out;
        }
        let width = self.labels.keys().map(|k| k.len()).max().unwrap_or(5).max(5);
        out.push_str(&format!("{:<width$}  {:>12}  counts\n", "label", "factor"));
        for (label, entry) in &self.labels {
            let counts: Vec<String> = entry.counts.iter().map(|c| c.to_string()).collect();
            out.push_str(&format!(
                "{label:<width$}  {:>12.6}  [{}]\n",
                entry.factor,
                counts.join(", ")
            ));
        }
        out
    }
}

/// Factors for every scoped label in the cluster.
pub fn cluster_report(
    state: &ClusterState,
    convention: VarianceConvention,
) -> Result<DistributednessReport> {
    let entries: Vec<(String, Vec<u64>)> = rendered_count_map(state).into_iter().collect();
    let factors = exec::map_collect(&entries, |(_, counts)| {
        variance_of_counts(counts, convention)
    });
    let mut labels = BTreeMap::new();
    for ((label, counts), factor) in entries.into_iter().zip(factors) {
        labels.insert(
            label,
            ReportEntry {
                counts,
                factor: factor?,
            },
        );
    }
    Ok(DistributednessReport { convention, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Node, PodSpec, ScopeLevel, UsageLabel};

    const DIST_1: [u64; 10] = [2, 3, 4, 5, 1, 6, 1, 2, 8, 9];
    const DIST_2: [u64; 10] = [4, 5, 4, 4, 4, 4, 4, 4, 4, 4];

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn golden_sample_variances() {
        let d1: Vec<f64> = DIST_1.iter().map(|&c| c as f64).collect();
        let d2: Vec<f64> = DIST_2.iter().map(|&c| c as f64).collect();
        close(variance(&d1, VarianceConvention::Sample).unwrap(), 8.1);
        close(variance(&d2, VarianceConvention::Sample).unwrap(), 0.1);
        close(
            variance_of_counts(&DIST_1, VarianceConvention::Sample).unwrap(),
            8.1,
        );
        close(
            variance_of_counts(&DIST_2, VarianceConvention::Sample).unwrap(),
            0.1,
        );
    }

    #[test]
    fn golden_population_variances() {
        // Sum of squared deviations is 72.9 (mean 4.1), so 1/n gives 7.29.
        let d1: Vec<f64> = DIST_1.iter().map(|&c| c as f64).collect();
        close(variance(&d1, VarianceConvention::Population).unwrap(), 7.29);
        close(
            variance_of_counts(&DIST_1, VarianceConvention::Population).unwrap(),
            7.29,
        );
        close(
            variance_of_counts(&DIST_2, VarianceConvention::Population).unwrap(),
            0.09,
        );
    }

    #[test]
    fn constant_series_has_zero_variance() {
        for c in [0.0, 4.0, 0.1, 1e9] {
            let v = vec![c; 4];
            assert_eq!(variance(&v, VarianceConvention::Sample).unwrap(), 0.0);
            assert_eq!(variance(&v, VarianceConvention::Population).unwrap(), 0.0);
        }
        assert_eq!(
            variance_of_counts(&[7, 7, 7], VarianceConvention::Sample).unwrap(),
            0.0
        );
    }

    #[test]
    fn variance_argument_errors() {
        assert!(variance(&[], VarianceConvention::Population).is_err());
        assert!(variance(&[1.0], VarianceConvention::Sample).is_err());
        assert!(variance(&[1.0], VarianceConvention::Population).is_ok());
        assert!(variance_of_counts(&[], VarianceConvention::Population).is_err());
        assert!(variance_of_counts(&[3], VarianceConvention::Sample).is_err());
    }

    fn cpu_high() -> UsageLabel {
        "cpu-high-always".parse().unwrap()
    }

    fn cluster_pod(id: &str) -> PodSpec {
        PodSpec::new(id, "default", "app", ScopeLevel::Cluster, [cpu_high()]).unwrap()
    }

    #[test]
    fn count_vector_empty_cluster() {
        let state = ClusterState::empty([Node::new("a"), Node::new("b")]).unwrap();
        let v = count_vector(&state, &ScopedLabel::cluster(cpu_high()));
        assert_eq!(v.counts, vec![0, 0]);
        assert!(cluster_report(&state, VarianceConvention::Sample)
            .unwrap()
            .labels
            .is_empty());
    }

    #[test]
    fn count_vector_single_assignment() {
        let state = ClusterState::new(
            [Node::new("a"), Node::new("b"), Node::new("c")],
            [cluster_pod("p")],
            [("p".to_string(), "b".to_string())],
        )
        .unwrap();
        let v = count_vector(&state, &ScopedLabel::cluster(cpu_high()));
        assert_eq!(v.counts, vec![0, 1, 0]);
        assert_eq!(v.total(), 1);
    }

    #[test]
    fn unassigned_pods_contribute_nothing() {
        let state = ClusterState::new(
            [Node::new("a"), Node::new("b")],
            [cluster_pod("p1"), cluster_pod("p2")],
            [("p1".to_string(), "a".to_string())],
        )
        .unwrap();
        let v = count_vector(&state, &ScopedLabel::cluster(cpu_high()));
        assert_eq!(v.counts, vec![1, 0]);
    }

    #[test]
    fn scope_suffixes_separate_count_vectors() {
        let ns_pod = PodSpec::new(
            "ns-pod",
            "payments",
            "gateway",
            ScopeLevel::Namespace,
            [cpu_high()],
        )
        .unwrap();
        let state = ClusterState::new(
            [Node::new("a"), Node::new("b")],
            [cluster_pod("c-pod"), ns_pod],
            [
                ("c-pod".to_string(), "a".to_string()),
                ("ns-pod".to_string(), "a".to_string()),
            ],
        )
        .unwrap();
        let report = cluster_report(&state, VarianceConvention::Sample).unwrap();
        let keys: Vec<&String> = report.labels.keys().collect();
        assert_eq!(keys, ["cpu-high-always", "cpu-high-always-payments"]);
        assert_eq!(report.labels["cpu-high-always"].counts, vec![1, 0]);
        assert_eq!(report.labels["cpu-high-always-payments"].counts, vec![1, 0]);
    }

    #[test]
    fn report_entries_match_standalone_factors() {
        let mem = "memory-low-gradual".parse().unwrap();
        let p3 = PodSpec::new("p3", "default", "app", ScopeLevel::Cluster, [mem]).unwrap();
        let state = ClusterState::new(
            [Node::new("a"), Node::new("b"), Node::new("c")],
            [cluster_pod("p1"), cluster_pod("p2"), p3],
            [
                ("p1".to_string(), "a".to_string()),
                ("p2".to_string(), "a".to_string()),
                ("p3".to_string(), "c".to_string()),
            ],
        )
        .unwrap();
        let report = cluster_report(&state, VarianceConvention::Sample).unwrap();
        assert_eq!(report.labels.len(), 2);
        for (rendered, entry) in &report.labels {
            let scoped = if rendered.starts_with("cpu") {
                ScopedLabel::cluster(cpu_high())
            } else {
                ScopedLabel::cluster(mem)
            };
            close(
                entry.factor,
                distributedness_factor(&state, &scoped, VarianceConvention::Sample).unwrap(),
            );
        }
    }
}
