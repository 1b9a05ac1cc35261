//! Dual-threshold channel classification, threshold calibration and
//! multi-frequency liquid identification.

use std::collections::BTreeMap;
use std::fmt;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::derive_seed;
use crate::device::{self, ChannelOccupancy, DeviceGeometry, LiquidLibrary};
use crate::dsp::{self, SensingConfig};
use crate::error::{Error, Result};

/// Frequency in Hz usable as an ordered map key.
pub type Frequency = OrderedFloat<f64>;

pub type FrequencyMap<V> = BTreeMap<Frequency, V>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Connectivity cut: at or below this a channel is open.
    pub t1: f64,
    /// Droplet cut: above this a connected channel carries a droplet.
    pub t2: f64,
    pub stimulus_frequency: f64,
}

impl Thresholds {
    pub fn new(t1: f64, t2: f64, stimulus_frequency: f64) -> Result<Self> {
        let t = Self {
            t1,
            t2,
            stimulus_frequency,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1 > 0.0 && self.t1 < self.t2 && self.t2.is_finite()) {
            return Err(Error::Uncalibrated(format!(
                "need 0 < t1 < t2, got t1 = {}, t2 = {}",
                self.t1, self.t2
            )));
        }
        if !(self.stimulus_frequency > 0.0) {
            return Err(Error::Uncalibrated(format!(
                "stimulus frequency {} must be positive",
                self.stimulus_frequency
            )));
        }
        Ok(())
    }
}

/// Classified state of one channel, ordered from lowest to highest magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelState {
    BadConnection,
    ConnectedIdle,
    ConnectedDroplet,
}

impl ChannelState {
    /// Display colour: blue for open, white for idle, red for droplet.
    pub fn color(self) -> &'static str {
        match self {
            ChannelState::BadConnection => "blue",
            ChannelState::ConnectedIdle => "white",
            ChannelState::ConnectedDroplet => "red",
        }
    }

    pub fn glyph(self) -> char {
        match self {
            ChannelState::BadConnection => 'B',
            ChannelState::ConnectedIdle => '.',
            ChannelState::ConnectedDroplet => 'D',
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelState::BadConnection => "bad_connection",
            ChannelState::ConnectedIdle => "connected_idle",
            ChannelState::ConnectedDroplet => "connected_droplet",
        }
    }
}

impl fmt::Display for ChannelState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Label of a calibration sample set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleClass {
    Open,
    Medium,
    Droplet,
}

impl fmt::Display for SampleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleClass::Open => "open",
            SampleClass::Medium => "medium",
            SampleClass::Droplet => "droplet",
        })
    }
}

/// Magnitudes strictly above a threshold move up a class; ties stay below.
pub fn classify(magnitude: f64, thresholds: &Thresholds) -> ChannelState {
    if magnitude <= thresholds.t1 {
        ChannelState::BadConnection
    } else if magnitude <= thresholds.t2 {
        ChannelState::ConnectedIdle
    } else {
        ChannelState::ConnectedDroplet
    }
}

fn extent(samples: &[f64], what: &'static str) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::Empty(what));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &m in samples {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::invalid(
                what,
                format!("magnitude {m} is not a finite non-negative value"),
            ));
        }
        lo = lo.min(m);
        hi = hi.max(m);
    }
    Ok((lo, hi))
}

/// Cut point between two separated classes: geometric mean, or the midpoint
/// when the lower class touches zero.
fn cut(lower: SampleClass, lower_max: f64, upper: SampleClass, upper_min: f64) -> Result<f64> {
    let overlap = Error::ClassOverlap {
        lower,
        upper,
        lower_max,
        upper_min,
    };
    if lower_max >= upper_min {
        return Err(overlap);
    }
    let geometric = (lower_max * upper_min).sqrt();
    if lower_max < geometric && geometric < upper_min {
        return Ok(geometric);
    }
    let mid = lower_max + (upper_min - lower_max) / 2.0;
    if lower_max < mid && mid < upper_min {
        Ok(mid)
    } else {
        Err(overlap)
    }
}

/// Places t1 between the open and medium samples and t2 between the medium and
/// droplet samples.
pub fn calibrate(
    open_samples: &[f64],
    medium_samples: &[f64],
    droplet_samples: &[f64],
    frequency: f64,
) -> Result<Thresholds> {
    let (_, open_max) = extent(open_samples, "open samples")?;
    let (medium_min, medium_max) = extent(medium_samples, "medium samples")?;
    let (droplet_min, _) = extent(droplet_samples, "droplet samples")?;
    let t1 = cut(SampleClass::Open, open_max, SampleClass::Medium, medium_min)?;
    let t2 = cut(
        SampleClass::Medium,
        medium_max,
        SampleClass::Droplet,
        droplet_min,
    )?;
    Thresholds::new(t1, t2, frequency)
}

/// Frequency with the largest liquid/medium contrast. Ties go to the lowest
/// frequency.
pub fn best_frequency(measurements: &FrequencyMap<(f64, f64)>) -> Result<f64> {
    match measurements.len() {
        0 => return Err(Error::Empty("frequency map")),
        1 => {
            return Err(Error::invalid(
                "frequency map",
                "at least two frequencies are needed",
            ))
        }
        _ => {}
    }
    let mut best: Option<(f64, f64)> = None;
    for (f, &(liquid, medium)) in measurements {
        let contrast = (liquid - medium).abs();
        if best.is_none_or(|(_, c)| contrast > c) {
            best = Some((f.0, contrast));
        }
    }
    Ok(best.map(|(f, _)| f).expect("map is non-empty"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiquidSignature {
    pub name: String,
    pub magnitudes: FrequencyMap<f64>,
    pub best_frequency: f64,
}

impl LiquidSignature {
    pub fn new(
        name: impl Into<String>,
        magnitudes: FrequencyMap<f64>,
        best_frequency: f64,
    ) -> Result<Self> {
        if !magnitudes.contains_key(&OrderedFloat(best_frequency)) {
            return Err(Error::invalid(
                "signature",
                format!("best frequency {best_frequency} Hz is not a measured frequency"),
            ));
        }
        if magnitudes.values().any(|m| !(*m >= 0.0)) {
            return Err(Error::invalid(
                "signature",
                "magnitudes must be non-negative",
            ));
        }
        Ok(Self {
            name: name.into(),
            magnitudes,
            best_frequency,
        })
    }
}

/// Measures one occupancy at each frequency. Keys are the snapped bin
/// frequencies actually read out.
pub fn measure_profile(
    geometry: &DeviceGeometry,
    library: &LiquidLibrary,
    occupancy: &ChannelOccupancy,
    config: &SensingConfig,
    frequencies: &[f64],
    seed: u64,
) -> Result<FrequencyMap<f64>> {
    let mut profile = FrequencyMap::new();
    for (i, &f) in frequencies.iter().enumerate() {
        let cfg = config.with_frequency(f);
        let generated = cfg.stimulus.effective_frequency(&cfg.adc)?;
        let c = device::dut_capacitance(geometry, occupancy, library, generated)?;
        let m = dsp::measure_channel(c, &cfg, derive_seed(seed, i as u64))?;
        profile.insert(OrderedFloat(m.magnitude.frequency), m.magnitude.value);
    }
    Ok(profile)
}

/// Builds a reference signature for `liquid` as a droplet surrounded by
/// `medium`.
pub fn simulate_signature(
    geometry: &DeviceGeometry,
    library: &LiquidLibrary,
    liquid: &str,
    medium: &str,
    config: &SensingConfig,
    frequencies: &[f64],
    seed: u64,
) -> Result<LiquidSignature> {
    let droplet = measure_profile(
        geometry,
        library,
        &ChannelOccupancy::Droplet(liquid.to_string()),
        config,
        frequencies,
        seed,
    )?;
    let background = measure_profile(
        geometry,
        library,
        &ChannelOccupancy::Medium(medium.to_string()),
        config,
        frequencies,
        derive_seed(seed, u64::MAX),
    )?;
    let paired = droplet
        .iter()
        .map(|(f, &m)| (*f, (m, background[f])))
        .collect::<FrequencyMap<_>>();
    let best = best_frequency(&paired)?;
    LiquidSignature::new(liquid, droplet, best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentifyOptions {
    /// Remove a uniform gain by mean-centering the log-magnitude differences.
    pub normalize_gain: bool,
    /// Relative gap between the two best distances below which the result is
    /// flagged as ambiguous.
    pub ambiguity_margin: f64,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        Self {
            normalize_gain: false,
            ambiguity_margin: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Identification {
    pub name: String,
    pub distance: f64,
    pub runner_up: Option<(String, f64)>,
    pub ambiguous: bool,
}

fn log_distance(
    measured: &FrequencyMap<f64>,
    signature: &LiquidSignature,
    normalize_gain: bool,
) -> Result<f64> {
    let diffs = measured
        .iter()
        .filter_map(|(f, &m)| {
            signature
                .magnitudes
                .get(f)
                .map(|&s| m.max(f64::MIN_POSITIVE).ln() - s.max(f64::MIN_POSITIVE).ln())
        })
        .collect::<Vec<_>>();
    if diffs.is_empty() {
        return Err(Error::NoCommonFrequency(signature.name.clone()));
    }
    let n = diffs.len() as f64;
    let shift = if normalize_gain {
        diffs.iter().sum::<f64>() / n
    } else {
        0.0
    };
    Ok((diffs.iter().map(|d| (d - shift).powi(2)).sum::<f64>() / n).sqrt())
}

/// Nearest library signature by RMS log-magnitude distance over the
/// frequencies both sides share.
pub fn identify_liquid(
    per_frequency: &FrequencyMap<f64>,
    library: &[LiquidSignature],
    options: &IdentifyOptions,
) -> Result<Identification> {
    if library.is_empty() {
        return Err(Error::Empty("signature library"));
    }
    let mut ranked = library
        .iter()
        .map(|sig| {
            Ok((
                log_distance(per_frequency, sig, options.normalize_gain)?,
                &sig.name,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));

    let (distance, name) = ranked[0];
    let runner_up = ranked.get(1).map(|&(d, n)| (n.clone(), d));
    let ambiguous = runner_up
        .as_ref()
        .is_some_and(|&(_, d2)| d2 == distance || d2 - distance < options.ambiguity_margin * d2);
    if ambiguous {
        log::warn!(
            "liquid identification ambiguous between {name} and {:?}",
            runner_up
        );
    }
    Ok(Identification {
        name: name.clone(),
        distance,
        runner_up,
        ambiguous,
    })
}
