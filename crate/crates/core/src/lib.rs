//! Variance-minimizing workload spreading.
//!
//! Workloads with similar resource-usage labels (e.g. `cpu-high-spike`)
//! should be spread evenly across nodes. This crate measures how evenly a
//! label is spread as the variance of its per-node count vector — the
//! *distributedness factor*, lower is better — and builds three tools on top
//! of that measure:
//!
//! - [`labeler`]: derives a usage label per resource kind from a historical
//!   usage time series (magnitude from mean or peak utilization, pattern
//!   from dispersion and trend).
//! - [`scheduler`]: places a new pod by hypothetically adding it to every
//!   feasible node and choosing the placement with the lowest aggregate
//!   post-placement factor.
//! - [`rebalancer`]: produces a dry-run plan of pod moves that lowers the
//!   total distributedness of an existing cluster.
//!
//! [`harness`] ties the pieces together with snapshot/usage file ingestion
//! and deterministic scenario replay.
//!
//! Candidate scoring and per-label reporting are data-parallel with the
//! `parallel` feature (enabled by default); disabling it yields a
//! sequential build with byte-identical results.

pub mod distributedness;
mod error;
pub mod exec;
pub mod harness;
pub mod labeler;
pub mod model;
pub mod rebalancer;
pub mod scheduler;

pub use distributedness::{
    cluster_report, count_vector, distributedness_factor, variance, variance_of_counts,
    DistributednessReport, LabelCountVector, ReportEntry, VarianceConvention,
};
pub use error::{Error, Result};
pub use exec::execution_mode;
pub use harness::{
    load_cluster, load_plan, load_pod, load_scenario, load_usage, run_scenario, save_cluster,
    save_plan, save_pods, Event, EventOutcome, EventRecord, EventSummary, RunOptions,
    RunTranscript, Scenario, ScenarioRun, UsageMap,
};
pub use labeler::{
    classify_magnitude, classify_pattern, derive_labels, LabelerConfig, MagnitudeMode, UsageSeries,
};
pub use model::{
    ClusterState, Magnitude, Node, Pattern, PodSpec, ResourceKind, ScopeLevel, ScopedLabel,
    UsageLabel,
};
pub use rebalancer::{
    apply_plan, rebalance, total_distributedness, Move, RebalanceConfig, RebalancePlan,
};
pub use scheduler::{apply, place, score_node, NodeScore, PlacementDecision};
