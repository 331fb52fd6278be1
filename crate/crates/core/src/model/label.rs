//! Usage labels: the unit of spreading.
//!
//! A [`UsageLabel`] names one resource kind, a consumption magnitude, and a
//! temporal pattern, rendered as `<resource>-<magnitude>-<pattern>`
//! (e.g. `cpu-low-spike`). A [`ScopedLabel`] is a usage label after the
//! owning pod's scope suffix has been applied; per-node counts are always
//! taken over scoped labels.

use crate::error::{Error, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// The four computing resources a label can describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceKind {
    Cpu,
    Memory,
    Network,
    Storage,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; 4] = [
        ResourceKind::Cpu,
        ResourceKind::Memory,
        ResourceKind::Network,
        ResourceKind::Storage,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ResourceKind::Cpu => "cpu",
            ResourceKind::Memory => "memory",
            ResourceKind::Network => "network",
            ResourceKind::Storage => "storage",
        }
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResourceKind {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "cpu" => Ok(ResourceKind::Cpu),
            "memory" => Ok(ResourceKind::Memory),
            "network" => Ok(ResourceKind::Network),
            "storage" => Ok(ResourceKind::Storage),
            _ => Err(()),
        }
    }
}

/// Consumption magnitude. Ordered `Low < Medium < High`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Magnitude {
    Low,
    Medium,
    High,
}

impl Magnitude {
    pub const ALL: [Magnitude; 3] = [Magnitude::Low, Magnitude::Medium, Magnitude::High];

    pub fn as_str(self) -> &'static str {
        match self {
            Magnitude::Low => "low",
            Magnitude::Medium => "medium",
            Magnitude::High => "high",
        }
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Magnitude {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "low" => Ok(Magnitude::Low),
            "medium" => Ok(Magnitude::Medium),
            "high" => Ok(Magnitude::High),
            _ => Err(()),
        }
    }
}

/// Temporal consumption pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    Always,
    Spike,
    Gradual,
}

impl Pattern {
    pub const ALL: [Pattern; 3] = [Pattern::Always, Pattern::Spike, Pattern::Gradual];

    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::Always => "always",
            Pattern::Spike => "spike",
            Pattern::Gradual => "gradual",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pattern {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "always" => Ok(Pattern::Always),
            "spike" => Ok(Pattern::Spike),
            "gradual" => Ok(Pattern::Gradual),
            _ => Err(()),
        }
    }
}

/// Granularity at which spreading is computed for a pod.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeLevel {
    /// Spread against every pod in the cluster carrying the same base label.
    Cluster,
    /// Spread within the pod's namespace; labels are suffixed with it.
    Namespace,
    /// Spread replicas of one application; labels are suffixed with
    /// namespace and application name.
    Application,
}

/// One `(resource, magnitude, pattern)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UsageLabel {
    pub resource: ResourceKind,
    pub magnitude: Magnitude,
    pub pattern: Pattern,
}

impl UsageLabel {
    pub fn new(resource: ResourceKind, magnitude: Magnitude, pattern: Pattern) -> Self {
        UsageLabel {
            resource,
            magnitude,
            pattern,
        }
    }

    /// All 36 labels of the taxonomy, in canonical order.
    pub fn all() -> impl Iterator<Item = UsageLabel> {
        ResourceKind::ALL.into_iter().flat_map(|r| {
            Magnitude::ALL
                .into_iter()
                .flat_map(move |m| Pattern::ALL.into_iter().map(move |p| UsageLabel::new(r, m, p)))
        })
    }
}

impl fmt::Display for UsageLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.resource, self.magnitude, self.pattern)
    }
}

impl FromStr for UsageLabel {
    type Err = Error;

    /// Parses `<resource>-<magnitude>-<pattern>`, naming the offending token
    /// on failure.
    fn from_str(text: &str) -> Result<UsageLabel> {
        let parse_err = |problem: String| Error::LabelParse {
            text: text.to_string(),
            problem,
        };
        let parts: Vec<&str> = text.split('-').collect();
        if parts.len() != 3 {
            return Err(parse_err(format!(
                "expected <resource>-<magnitude>-<pattern>, got {} component(s)",
                parts.len()
            )));
        }
        let resource = parts[0]
            .parse::<ResourceKind>()
            .map_err(|()| parse_err(format!("unknown resource {:?}", parts[0])))?;
        let magnitude = parts[1]
            .parse::<Magnitude>()
            .map_err(|()| parse_err(format!("unknown magnitude {:?}", parts[1])))?;
        let pattern = parts[2]
            .parse::<Pattern>()
            .map_err(|()| parse_err(format!("unknown pattern {:?}", parts[2])))?;
        Ok(UsageLabel::new(resource, magnitude, pattern))
    }
}

impl Serialize for UsageLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for UsageLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A usage label with its owning pod's scope suffix applied.
///
/// Rendering is the base label at cluster scope, `<base>-<namespace>` at
/// namespace scope and `<base>-<namespace>-<application>` at application
/// scope. Identity for counting purposes is the rendered string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScopedLabel {
    pub base: UsageLabel,
    pub namespace: Option<String>,
    pub application: Option<String>,
}

impl ScopedLabel {
    pub fn cluster(base: UsageLabel) -> Self {
        ScopedLabel {
            base,
            namespace: None,
            application: None,
        }
    }

    pub fn namespaced(base: UsageLabel, namespace: impl Into<String>) -> Self {
        ScopedLabel {
            base,
            namespace: Some(namespace.into()),
            application: None,
        }
    }

    pub fn application(
        base: UsageLabel,
        namespace: impl Into<String>,
        application: impl Into<String>,
    ) -> Self {
        ScopedLabel {
            base,
            namespace: Some(namespace.into()),
            application: Some(application.into()),
        }
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ScopedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        if let Some(ns) = &self.namespace {
            write!(f, "-{ns}")?;
        }
        if let Some(app) = &self.application {
            write!(f, "-{app}")?;
        }
        Ok(())
    }
}

/// Checks a namespace or application name against the Kubernetes DNS-label
/// charset: lowercase alphanumerics and internal hyphens, at most 63 chars.
/// Keeping names in this charset keeps scoped-label rendering unambiguous.
pub fn validate_name(kind: &str, name: &str) -> Result<()> {
    let bad = |why: &str| {
        Err(Error::InvalidArgument(format!(
            "{kind} {name:?} {why} (want lowercase alphanumerics and internal hyphens)"
        )))
    };
    if name.is_empty() {
        return bad("is empty");
    }
    if name.len() > 63 {
        return bad("is longer than 63 characters");
    }
    if !name
        .bytes()
        .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
    {
        return bad("contains an invalid character");
    }
    if name.starts_with('-') || name.ends_with('-') {
        return bad("starts or ends with a hyphen");
    }
    Ok(())
}
