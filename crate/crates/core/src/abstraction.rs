//! Mapping raw sensor windows and clinical records to state keys.
//!
//! Wearable windows become `(activity, tilt, energy)` tuples, optionally
//! with a mean angular-rate bin. Quantile edges are fitted once on a
//! reference population and then applied unchanged to every window.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::counts::StateKey;
use crate::error::{Error, Result};

/// One time-ordered sample of a labeled IMU stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSample {
    pub timestamp: f64,
    pub label: String,
    /// Contiguous run this sample belongs to. Windows never straddle two
    /// segments, so dropped rows cannot splice unrelated data together.
    pub segment: u32,
    /// Recording the sample came from (e.g. a subject id).
    pub source: u32,
    pub acc: [f64; 3],
    pub gyro: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledStream {
    pub sample_rate_hz: f64,
    pub samples: Vec<SensorSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorWindow {
    pub label: String,
    pub sample_rate_hz: f64,
    pub source: u32,
    /// Index of the first sample in the source stream.
    pub start: usize,
    pub acc: Vec<[f64; 3]>,
    pub gyro: Vec<[f64; 3]>,
}

impl SensorWindow {
    pub fn len(&self) -> usize {
        self.acc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.acc.is_empty()
    }
}

/// Fixed-length sliding windows over `stream`.
///
/// Windows are `round(window_s * rate)` samples long and start every
/// `round(stride_s * rate)` samples. A window is kept only when every
/// sample has the same label and segment; the trailing partial window is
/// dropped.
pub fn make_windows(stream: &LabeledStream, window_s: f64, stride_s: f64) -> Result<Vec<SensorWindow>> {
    if !(window_s > 0.0) || !(stride_s > 0.0) || stride_s > window_s {
        return Err(Error::invalid(format!(
            "need 0 < stride ({stride_s}) <= window ({window_s})"
        )));
    }
    let rate = stream.sample_rate_hz;
    if !(rate > 0.0) {
        return Err(Error::invalid(format!(
            "sample rate must be positive, got {rate}"
        )));
    }
    let len = (window_s * rate).round() as usize;
    let step = (stride_s * rate).round() as usize;
    if len == 0 || step == 0 {
        return Err(Error::invalid("window or stride shorter than one sample"));
    }
    let samples = &stream.samples;
    let mut out = Vec::new();
    let mut start = 0;
    while start + len <= samples.len() {
        let slice = &samples[start..start + len];
        let first = &slice[0];
        if slice
            .iter()
            .all(|s| s.label == first.label && s.segment == first.segment)
        {
            out.push(SensorWindow {
                label: first.label.clone(),
                sample_rate_hz: rate,
                source: first.source,
                start,
                acc: slice.iter().map(|s| s.acc).collect(),
                gyro: slice.iter().map(|s| s.gyro).collect(),
            });
        }
        start += step;
    }
    Ok(out)
}

fn mean3(v: &[[f64; 3]]) -> [f64; 3] {
    let mut m = [0.0; 3];
    for s in v {
        for (acc, x) in m.iter_mut().zip(s) {
            *acc += x;
        }
    }
    let l = v.len() as f64;
    m.map(|x| x / l)
}

fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Angle in `[0, pi/2]` between the window-mean acceleration and the
/// sensor z axis, ignoring sign. `None` for a zero mean vector.
pub fn tilt_angle(window: &SensorWindow) -> Option<f64> {
    if window.is_empty() {
        return None;
    }
    let mu = mean3(&window.acc);
    let r = norm(&mu);
    if !(r > 0.0) || !r.is_finite() {
        return None;
    }
    Some((mu[2].abs() / r).min(1.0).acos())
}

/// Tilt angle discretized into `bins` equal-width bins over `[0, pi/2]`.
pub fn tilt_bin(window: &SensorWindow, bins: u32) -> Result<u32> {
    tilt_bin_indexed(window, bins, window.start)
}

fn tilt_bin_indexed(window: &SensorWindow, bins: u32, index: usize) -> Result<u32> {
    if bins == 0 {
        return Err(Error::invalid("tilt bin count must be at least 1"));
    }
    let phi = tilt_angle(window).ok_or(Error::DegenerateWindow { window: index })?;
    let raw = (f64::from(bins) * phi / FRAC_PI_2).floor() as u32;
    Ok(raw.min(bins - 1))
}

/// Mean squared gyroscope norm `(1/L) sum ||w_t||^2`.
pub fn gyro_energy(window: &SensorWindow) -> f64 {
    if window.gyro.is_empty() {
        return 0.0;
    }
    window
        .gyro
        .iter()
        .map(|w| w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
        .sum::<f64>()
        / window.gyro.len() as f64
}

/// Mean angular-rate magnitude `(1/L) sum ||w_t||`.
pub fn angular_rate_magnitude(window: &SensorWindow) -> f64 {
    if window.gyro.is_empty() {
        return 0.0;
    }
    window.gyro.iter().map(norm).sum::<f64>() / window.gyro.len() as f64
}

/// Empirical quantiles at levels `0, 1/q, ..., 1`, linearly interpolated
/// between order statistics.
pub fn fit_quantile_edges(values: &[f64], q: u32) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("no values to fit quantile edges on"));
    }
    if q == 0 {
        return Err(Error::invalid("bin count must be at least 1"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("quantile input contains a non-finite value"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let last = (sorted.len() - 1) as f64;
    Ok((0..=q)
        .map(|j| {
            let h = last * f64::from(j) / f64::from(q);
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        })
        .collect())
}

pub fn fit_energy_edges(energies: &[f64], q: u32) -> Result<Vec<f64>> {
    fit_quantile_edges(energies, q)
}

/// Bin index for `value` given `Q+1` nondecreasing edges.
///
/// Bin 0 is closed on both ends; every later bin is `(edge_j, edge_j+1]`.
/// Values outside the fitted range clamp to the extreme bins, and fully
/// degenerate edges put everything in bin 0.
pub fn energy_bin(value: f64, edges: &[f64]) -> u32 {
    let q = edges.len().saturating_sub(1);
    if q <= 1 || edges[0] == edges[q] {
        return 0;
    }
    (0..q).find(|&j| value <= edges[j + 1]).unwrap_or(q - 1) as u32
}

fn check_edges(edges: &[f64], bins: u32, what: &str) -> Result<()> {
    if edges.len() != bins as usize + 1 {
        return Err(Error::invalid(format!(
            "{what} needs {} edges, got {}",
            bins + 1,
            edges.len()
        )));
    }
    if edges.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::invalid(format!("{what} edges must be nondecreasing")));
    }
    Ok(())
}

/// A factor that can be extracted from a sensor window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Activity,
    Tilt,
    Energy,
    AngularRate,
}

impl Factor {
    pub fn name(self) -> &'static str {
        match self {
            Factor::Activity => "activity",
            Factor::Tilt => "tilt",
            Factor::Energy => "energy",
            Factor::AngularRate => "angular_rate",
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Factor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "activity" | "a" => Ok(Factor::Activity),
            "tilt" | "p" => Ok(Factor::Tilt),
            "energy" | "e" => Ok(Factor::Energy),
            "angular_rate" | "rate" => Ok(Factor::AngularRate),
            other => Err(Error::invalid(format!("unknown factor `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbstractionConfig {
    pub refinement_tag: String,
    /// Enabled factors; keys always list them in canonical order.
    pub factors: Vec<Factor>,
    pub tilt_bins: u32,
    pub energy_bins: u32,
    pub energy_edges: Option<Vec<f64>>,
    pub rate_bins: u32,
    pub rate_edges: Option<Vec<f64>>,
}

impl Default for AbstractionConfig {
    fn default() -> Self {
        Self::activity_tilt_energy()
    }
}

impl AbstractionConfig {
    fn with(tag: &str, factors: &[Factor]) -> Self {
        Self {
            refinement_tag: tag.to_owned(),
            factors: factors.to_vec(),
            tilt_bins: 6,
            energy_bins: 3,
            energy_edges: None,
            rate_bins: 3,
            rate_edges: None,
        }
    }

    /// `x = a`
    pub fn activity() -> Self {
        Self::with("a", &[Factor::Activity])
    }

    /// `x = (a, p)` with 6 tilt bins.
    pub fn activity_tilt() -> Self {
        Self::with("a,p", &[Factor::Activity, Factor::Tilt])
    }

    /// `x = (a, p, e)` with 6 tilt bins and 3 energy tertiles.
    pub fn activity_tilt_energy() -> Self {
        Self::with("a,p,e", &[Factor::Activity, Factor::Tilt, Factor::Energy])
    }

    /// Finer field-use abstraction: 12 tilt bins, 8 energy bins and 8 bins
    /// of mean angular-rate magnitude. The resolutions are a chosen
    /// interpretation and can be overridden from a config file.
    pub fn deployment_refined() -> Self {
        Self {
            tilt_bins: 12,
            energy_bins: 8,
            rate_bins: 8,
            ..Self::with(
                "deployment-refined",
                &[
                    Factor::Activity,
                    Factor::Tilt,
                    Factor::Energy,
                    Factor::AngularRate,
                ],
            )
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "a" | "activity" => Ok(Self::activity()),
            "a,p" | "activity-tilt" => Ok(Self::activity_tilt()),
            "a,p,e" | "activity-tilt-energy" => Ok(Self::activity_tilt_energy()),
            "deployment-refined" => Ok(Self::deployment_refined()),
            other => Err(Error::invalid(format!("unknown abstraction preset `{other}`"))),
        }
    }

    pub fn has(&self, f: Factor) -> bool {
        self.factors.contains(&f)
    }

    fn ordered_factors(&self) -> Vec<Factor> {
        let mut f = self.factors.clone();
        f.sort();
        f.dedup();
        f
    }

    /// Factor names in key order.
    pub fn schema(&self) -> Vec<String> {
        self.ordered_factors()
            .into_iter()
            .map(|f| f.name().to_owned())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.factors.is_empty() {
            return Err(Error::invalid("abstraction enables no factors"));
        }
        if self.tilt_bins == 0 || self.energy_bins == 0 || self.rate_bins == 0 {
            return Err(Error::invalid("bin counts must be at least 1"));
        }
        if let Some(e) = &self.energy_edges {
            check_edges(e, self.energy_bins, "energy")?;
        }
        if let Some(e) = &self.rate_edges {
            check_edges(e, self.rate_bins, "angular-rate")?;
        }
        Ok(())
    }

    /// Fit the quantile edges of every enabled quantile factor on
    /// `reference`. Edges already present are replaced.
    pub fn fit(&mut self, reference: &[SensorWindow]) -> Result<()> {
        self.validate()?;
        if self.has(Factor::Energy) {
            let e: Vec<f64> = reference.iter().map(gyro_energy).collect();
            self.energy_edges = Some(fit_quantile_edges(&e, self.energy_bins)?);
        }
        if self.has(Factor::AngularRate) {
            let r: Vec<f64> = reference.iter().map(angular_rate_magnitude).collect();
            self.rate_edges = Some(fit_quantile_edges(&r, self.rate_bins)?);
        }
        Ok(())
    }
}

/// State key for one window under a fitted configuration.
pub fn abstract_window(window: &SensorWindow, config: &AbstractionConfig) -> Result<StateKey> {
    abstract_indexed(window, config, window.start)
}

fn abstract_indexed(window: &SensorWindow, config: &AbstractionConfig, index: usize) -> Result<StateKey> {
    let mut factors = Vec::with_capacity(config.factors.len());
    for f in config.ordered_factors() {
        let value = match f {
            Factor::Activity => window.label.clone(),
            Factor::Tilt => tilt_bin_indexed(window, config.tilt_bins, index)?.to_string(),
            Factor::Energy => {
                let edges = config
                    .energy_edges
                    .as_deref()
                    .ok_or_else(|| Error::invalid("energy edges have not been fitted"))?;
                energy_bin(gyro_energy(window), edges).to_string()
            }
            Factor::AngularRate => {
                let edges = config
                    .rate_edges
                    .as_deref()
                    .ok_or_else(|| Error::invalid("angular-rate edges have not been fitted"))?;
                energy_bin(angular_rate_magnitude(window), edges).to_string()
            }
        };
        factors.push((f.name(), value));
    }
    StateKey::new(factors)
}

/// Abstract every window in parallel; errors name the window's position
/// in `windows`.
pub fn abstract_windows(windows: &[SensorWindow], config: &AbstractionConfig) -> Result<Vec<StateKey>> {
    config.validate()?;
    windows
        .par_iter()
        .enumerate()
        .map(|(i, w)| abstract_indexed(w, config, i))
        .collect()
}

/// One hospital admission with its `(sequence number, ICD code)` list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Admission {
    pub id: String,
    pub diagnoses: Vec<(u32, String)>,
}

pub const ICD_PREFIX_LEN: usize = 4;

/// First four characters of the primary (sequence 1) diagnosis code.
///
/// `None` when the admission has no primary diagnosis. If several rows
/// claim sequence 1, the first one wins.
pub fn icd_prefix_state(admission: &Admission) -> Option<StateKey> {
    let code = admission
        .diagnoses
        .iter()
        .find(|(seq, _)| *seq == 1)
        .map(|(_, code)| code.trim())?;
    let prefix: String = code.chars().take(ICD_PREFIX_LEN).collect();
    Some(StateKey::single("icd4", prefix))
}
