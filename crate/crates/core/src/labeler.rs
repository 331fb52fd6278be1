//! Automatic label derivation from usage time series.
//!
//! Magnitude comes from mean or peak utilization against capacity, split at
//! two configurable cutoffs. The pattern discriminator is a construction of
//! this crate (no standard definition of "spike" vs "gradual" exists):
//! a series is `always` when its coefficient of variation is small,
//! otherwise `gradual` when the least-squares trend over the normalized
//! window is steep enough, otherwise `spike`. Both statistics are scale-free,
//! so classification is unchanged when values and capacity are rescaled
//! together.

use crate::error::{Error, Result};
use crate::model::{Magnitude, Pattern, ResourceKind, UsageLabel};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Observed usage of one resource over a past time period.
///
/// Timestamps are seconds (any fixed epoch); values are in resource units
/// and `capacity` is the node or limit capacity used for normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageSeries {
    pub resource: ResourceKind,
    /// `(timestamp, value)` pairs with non-decreasing timestamps.
    pub samples: Vec<(f64, f64)>,
    pub capacity: f64,
}

impl UsageSeries {
    pub fn new(resource: ResourceKind, samples: Vec<(f64, f64)>, capacity: f64) -> Self {
        UsageSeries {
            resource,
            samples,
            capacity,
        }
    }

    /// Series over implicit unit-spaced timestamps, for synthetic data.
    pub fn from_values(resource: ResourceKind, values: &[f64], capacity: f64) -> Self {
        let samples = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as f64, v))
            .collect();
        UsageSeries::new(resource, samples, capacity)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.len() < 2 {
            return Err(Error::InsufficientData {
                resource: self.resource,
                got: self.samples.len(),
            });
        }
        if !(self.capacity > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{} series capacity must be positive, got {}",
                self.resource, self.capacity
            )));
        }
        for &(_, value) in &self.samples {
            if !(value >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{} series contains a negative or non-finite value {value}",
                    self.resource
                )));
            }
        }
        for pair in self.samples.windows(2) {
            if pair[1].0 < pair[0].0 {
                return Err(Error::InvalidArgument(format!(
                    "{} series timestamps decrease at t={}",
                    self.resource, pair[1].0
                )));
            }
        }
        Ok(())
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|&(_, v)| v)
    }
}

/// Whether magnitude is judged on average or peak utilization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MagnitudeMode {
    #[default]
    Mean,
    Peak,
}

/// Thresholds for classification. All fields have defaults, so a config
/// file only needs the ones it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelerConfig {
    #[serde(default)]
    pub magnitude_mode: MagnitudeMode,
    /// Utilization below this is `low`. Half-open: exactly the cutoff is
    /// already `medium`.
    #[serde(default = "default_low_cutoff")]
    pub low_cutoff: f64,
    /// Utilization at or above this is `high`.
    #[serde(default = "default_high_cutoff")]
    pub high_cutoff: f64,
    /// Maximum coefficient of variation (population stddev over mean) for
    /// the `always` pattern.
    #[serde(default = "default_cv_always_max")]
    pub cv_always_max: f64,
    /// Minimum |least-squares slope| of utilization over the normalized
    /// window for the `gradual` pattern.
    #[serde(default = "default_slope_gradual_min")]
    pub slope_gradual_min: f64,
}

fn default_low_cutoff() -> f64 {
    0.33
}

fn default_high_cutoff() -> f64 {
    0.66
}

fn default_cv_always_max() -> f64 {
    0.15
}

fn default_slope_gradual_min() -> f64 {
    0.30
}

impl Default for LabelerConfig {
    fn default() -> Self {
        LabelerConfig {
            magnitude_mode: MagnitudeMode::Mean,
            low_cutoff: default_low_cutoff(),
            high_cutoff: default_high_cutoff(),
            cv_always_max: default_cv_always_max(),
            slope_gradual_min: default_slope_gradual_min(),
        }
    }
}

impl LabelerConfig {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "{name} must be in (0,1), got {v}"
                )))
            }
        };
        in_unit("low_cutoff", self.low_cutoff)?;
        in_unit("high_cutoff", self.high_cutoff)?;
        if self.low_cutoff >= self.high_cutoff {
            return Err(Error::InvalidArgument(format!(
                "low_cutoff {} must be below high_cutoff {}",
                self.low_cutoff, self.high_cutoff
            )));
        }
        if !(self.cv_always_max >= 0.0) {
            return Err(Error::InvalidArgument(
                "cv_always_max must be non-negative".into(),
            ));
        }
        if !(self.slope_gradual_min >= 0.0) {
            return Err(Error::InvalidArgument(
                "slope_gradual_min must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

fn mean<I: Iterator<Item = f64>>(iter: I, n: usize) -> f64 {
    iter.sum::<f64>() / n as f64
}

/// Low/medium/high from mean or peak utilization against capacity.
/// Boundaries are half-open: `u == low_cutoff` is medium, `u == high_cutoff`
/// is high.
pub fn classify_magnitude(series: &UsageSeries, config: &LabelerConfig) -> Result<Magnitude> {
    series.validate()?;
    config.validate()?;
    let n = series.samples.len();
    let level = match config.magnitude_mode {
        MagnitudeMode::Mean => mean(series.values(), n),
        MagnitudeMode::Peak => series.values().fold(0.0_f64, f64::max),
    };
    let utilization = level / series.capacity;
    Ok(if utilization < config.low_cutoff {
        Magnitude::Low
    } else if utilization < config.high_cutoff {
        Magnitude::Medium
    } else {
        Magnitude::High
    })
}

/// Population coefficient of variation; series mean must be positive.
fn coefficient_of_variation(series: &UsageSeries) -> Result<f64> {
    let n = series.samples.len();
    let mu = mean(series.values(), n);
    if mu <= 0.0 {
        return Err(Error::Unclassifiable {
            resource: series.resource,
        });
    }
    let ssd: f64 = series
        .values()
        .map(|v| {
            let d = v - mu;
            d * d
        })
        .sum();
    Ok((ssd / n as f64).sqrt() / mu)
}

/// Least-squares slope of utilization over time normalized to [0,1].
///
/// Uniformly spaced timestamps reduce to order positions; non-uniform
/// spacing weights the fit by actual spacing. A zero time span has no trend.
fn normalized_slope(series: &UsageSeries) -> f64 {
    let n = series.samples.len();
    let t0 = series.samples[0].0;
    let span = series.samples[n - 1].0 - t0;
    if span <= 0.0 {
        return 0.0;
    }
    let points: Vec<(f64, f64)> = series
        .samples
        .iter()
        .map(|&(t, v)| ((t - t0) / span, v / series.capacity))
        .collect();
    let t_mean = mean(points.iter().map(|p| p.0), n);
    let y_mean = mean(points.iter().map(|p| p.1), n);
    let mut s_ty = 0.0;
    let mut s_tt = 0.0;
    for &(t, y) in &points {
        s_ty += (t - t_mean) * (y - y_mean);
        s_tt += (t - t_mean) * (t - t_mean);
    }
    if s_tt == 0.0 {
        0.0
    } else {
        s_ty / s_tt
    }
}

/// Always/gradual/spike from dispersion and trend.
///
/// Precedence: a small coefficient of variation is `always`; otherwise a
/// steep enough trend is `gradual`; what remains is the residual bursty
/// class, `spike`. An all-zero series is an error — callers that want idle
/// workloads labeled must decide explicitly (e.g. low-always), not inherit
/// a silent default.
pub fn classify_pattern(series: &UsageSeries, config: &LabelerConfig) -> Result<Pattern> {
    series.validate()?;
    config.validate()?;
    let cv = coefficient_of_variation(series)?;
    if cv <= config.cv_always_max {
        return Ok(Pattern::Always);
    }
    if normalized_slope(series).abs() >= config.slope_gradual_min {
        return Ok(Pattern::Gradual);
    }
    Ok(Pattern::Spike)
}

/// Full label for one series.
pub fn classify(series: &UsageSeries, config: &LabelerConfig) -> Result<UsageLabel> {
    Ok(UsageLabel::new(
        series.resource,
        classify_magnitude(series, config)?,
        classify_pattern(series, config)?,
    ))
}

/// One label per resource kind present in the map; absent kinds produce no
/// label.
pub fn derive_labels(
    usage: &BTreeMap<ResourceKind, UsageSeries>,
    config: &LabelerConfig,
) -> Result<BTreeSet<UsageLabel>> {
    let mut labels = BTreeSet::new();
    for (&resource, series) in usage {
        if series.resource != resource {
            return Err(Error::InvalidArgument(format!(
                "usage map entry {resource} holds a series for {}",
                series.resource
            )));
        }
        labels.insert(classify(series, config)?);
    }
    Ok(labels)
}
