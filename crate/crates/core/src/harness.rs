//! File ingestion and scenario replay.
//!
//! Snapshots, usage histories, scenarios, and plans all live in plain files
//! so runs are reproducible from inputs alone. Scenario replay is strictly
//! sequential and seed-free: the same scenario and convention always produce
//! a byte-identical transcript.

use crate::distributedness::{cluster_report, VarianceConvention};
use crate::error::{Error, Result};
use crate::labeler::UsageSeries;
use crate::model::{ClusterState, PodSpec, ResourceKind};
use crate::rebalancer::{apply_plan, rebalance, RebalanceConfig, RebalancePlan};
use crate::scheduler::{apply, place, PlacementDecision};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

/// Usage histories grouped by pod, then resource kind.
pub type UsageMap = BTreeMap<String, BTreeMap<ResourceKind, UsageSeries>>;

// ---------------------------------------------------------------------------
// Cluster snapshots
// ---------------------------------------------------------------------------

/// Loads and validates a cluster snapshot file.
pub fn load_cluster(path: &Path) -> Result<ClusterState> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| Error::from(e).in_file(path))
}

pub fn save_cluster(path: &Path, state: &ClusterState) -> Result<()> {
    write_json(path, state)
}

/// Loads a single pod spec file.
pub fn load_pod(path: &Path) -> Result<PodSpec> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| Error::from(e).in_file(path))
}

pub fn save_pods(path: &Path, pods: &[PodSpec]) -> Result<()> {
    write_json(path, &pods)
}

// ---------------------------------------------------------------------------
// Rebalance plans
// ---------------------------------------------------------------------------

pub fn load_plan(path: &Path) -> Result<RebalancePlan> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| Error::from(e).in_file(path))
}

pub fn save_plan(path: &Path, plan: &RebalancePlan) -> Result<()> {
    write_json(path, plan)
}

// ---------------------------------------------------------------------------
// Usage ingest (JSON and CSV)
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UsageSeriesDoc {
    capacity: f64,
    samples: Vec<(String, f64)>,
}

#[derive(Deserialize)]
struct UsageCsvRow {
    pod_id: String,
    resource: ResourceKind,
    timestamp: String,
    value: f64,
    capacity: f64,
}

fn parse_timestamp(text: &str) -> Result<f64> {
    let parsed = chrono::DateTime::parse_from_rfc3339(text).map_err(|e| {
        Error::InvalidArgument(format!("invalid timestamp {text:?}: {e}"))
    })?;
    Ok(parsed.timestamp_millis() as f64 / 1000.0)
}

/// Loads a usage history file. `.csv` selects the columnar format
/// (`pod_id,resource,timestamp,value,capacity`); anything else is parsed as
/// the JSON map. Both formats yield identical series for the same data.
pub fn load_usage(path: &Path) -> Result<UsageMap> {
    let is_csv = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    if is_csv {
        load_usage_csv(path)
    } else {
        load_usage_json(path)
    }
    .map_err(|e| match e {
        e @ Error::File { .. } => e,
        other => other.in_file(path),
    })
}

fn load_usage_json(path: &Path) -> Result<UsageMap> {
    let text = read(path)?;
    let doc: BTreeMap<String, BTreeMap<ResourceKind, UsageSeriesDoc>> =
        serde_json::from_str(&text)?;
    let mut map = UsageMap::new();
    for (pod_id, resources) in doc {
        let mut per_resource = BTreeMap::new();
        for (resource, series_doc) in resources {
            let mut samples = Vec::with_capacity(series_doc.samples.len());
            for (ts, value) in series_doc.samples {
                let t = parse_timestamp(&ts).map_err(|e| {
                    Error::InvalidArgument(format!("pod {pod_id:?} {resource}: {e}"))
                })?;
                samples.push((t, value));
            }
            per_resource.insert(
                resource,
                UsageSeries::new(resource, samples, series_doc.capacity),
            );
        }
        map.insert(pod_id, per_resource);
    }
    Ok(map)
}

fn load_usage_csv(path: &Path) -> Result<UsageMap> {
    let mut reader = csv::Reader::from_path(path).map_err(Error::from)?;
    let mut map = UsageMap::new();
    for row in reader.deserialize() {
        let row: UsageCsvRow = row?;
        let t = parse_timestamp(&row.timestamp).map_err(|e| {
            Error::InvalidArgument(format!("pod {:?} {}: {e}", row.pod_id, row.resource))
        })?;
        let series = map
            .entry(row.pod_id.clone())
            .or_default()
            .entry(row.resource)
            .or_insert_with(|| UsageSeries::new(row.resource, Vec::new(), row.capacity));
        if series.capacity != row.capacity {
            return Err(Error::InvalidArgument(format!(
                "pod {:?} {}: capacity changes from {} to {}",
                row.pod_id, row.resource, series.capacity, row.capacity
            )));
        }
        series.samples.push((t, row.value));
    }
    Ok(map)
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

/// One step of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Event {
    /// A scheduling request for a pod that already carries its labels.
    Arrive { pod: PodSpec },
    /// An assigned pod leaves its node (the pod itself stays known).
    Depart { pod: String },
    /// Run the rebalancer and apply its plan.
    Rebalance {
        #[serde(default)]
        config: RebalanceConfig,
    },
}

/// An initial cluster plus an ordered event list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub initial: ClusterState,
    pub events: Vec<Event>,
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| Error::from(e).in_file(path))
}

/// Compact identification of the event a record belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EventSummary {
    Arrive { pod: String },
    Depart { pod: String },
    Rebalance,
}

/// What an event did to the cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum EventOutcome {
    Placed { decision: PlacementDecision },
    Failed { error: String },
    Departed { from: String },
    Rebalanced { plan: RebalancePlan },
}

/// One transcript line: the event, its outcome, and the per-label factors
/// after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: usize,
    pub event: EventSummary,
    pub outcome: EventOutcome,
    pub factors: BTreeMap<String, f64>,
}

/// Append-only record of a scenario run, one line per event.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunTranscript {
    pub records: Vec<EventRecord>,
}

impl RunTranscript {
    /// JSON-lines rendering: streamable and diff-friendly.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&serde_json::to_string(record)?);
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Abort on an unschedulable arrival instead of recording a failed
    /// event and continuing.
    pub strict: bool,
}

/// A finished replay: the transcript and the state it left behind.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub transcript: RunTranscript,
    pub final_state: ClusterState,
}

/// Replays a scenario's events in order.
///
/// Arrivals must already carry usage labels; an unlabeled arrival is an
/// error. An unschedulable arrival is recorded as a failed event and replay
/// continues, unless [`RunOptions::strict`] is set. Departing pods must
/// exist and be assigned.
pub fn run_scenario(
    scenario: &Scenario,
    convention: VarianceConvention,
    options: RunOptions,
) -> Result<ScenarioRun> {
    let mut state = scenario.initial.clone();
    let mut records = Vec::with_capacity(scenario.events.len());

    for (seq, event) in scenario.events.iter().enumerate() {
        let (summary, outcome) = match event {
            Event::Arrive { pod } => {
                let summary = EventSummary::Arrive {
                    pod: pod.id.clone(),
                };
                match place(&state, pod, convention) {
                    Ok(decision) => {
                        state = apply(&state, &decision)?;
                        (summary, EventOutcome::Placed { decision })
                    }
                    Err(err @ Error::Unschedulable { .. }) if !options.strict => (
                        summary,
                        EventOutcome::Failed {
                            error: err.to_string(),
                        },
                    ),
                    Err(err) => return Err(err),
                }
            }
            Event::Depart { pod } => {
                if state.pod(pod).is_none() {
                    return Err(Error::InvalidArgument(format!(
                        "event {seq}: departing pod {pod:?} does not exist"
                    )));
                }
                let from = state.unassign(pod).map_err(|_| {
                    Error::InvalidArgument(format!(
                        "event {seq}: departing pod {pod:?} is not assigned"
                    ))
                })?;
                (
                    EventSummary::Depart { pod: pod.clone() },
                    EventOutcome::Departed { from },
                )
            }
            Event::Rebalance { config } => {
                let plan = rebalance(&state, config, convention)?;
                state = apply_plan(&state, &plan)?;
                (EventSummary::Rebalance, EventOutcome::Rebalanced { plan })
            }
        };

        let factors = cluster_report(&state, convention)?
            .labels
            .into_iter()
            .map(|(label, entry)| (label, entry.factor))
            .collect();
        records.push(EventRecord {
            seq,
            event: summary,
            outcome,
            factors,
        });
    }

    Ok(ScenarioRun {
        transcript: RunTranscript { records },
        final_state: state,
    })
}

// ---------------------------------------------------------------------------
// Shared file helpers
// ---------------------------------------------------------------------------

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::from(e).in_file(path))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::from(e).in_file(path))
}
