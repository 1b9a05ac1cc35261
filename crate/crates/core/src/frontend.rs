//! Time-domain model of the sensing chain.
//!
//! A 0→V square wave drives the DUT capacitance into a sense resistor, which
//! forms an RC differentiator. The resulting bipolar spikes are lifted by the
//! summing amplifier, scaled by the divider and digitised by the ADC.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{Error, Result};

/// Fraction of clipped samples above which a buffer is reported as saturated.
pub const SATURATION_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StimulusConfig {
    /// High level of the square wave, volts.
    pub amplitude: f64,
    /// Requested stimulus frequency, Hz.
    pub frequency: f64,
    /// Snap the generated stimulus to the nearest FFT bin.
    pub coherent: bool,
}

impl Default for StimulusConfig {
    fn default() -> Self {
        Self {
            amplitude: 180.0,
            frequency: 12e3,
            coherent: true,
        }
    }
}

impl StimulusConfig {
    pub const MIN_AMPLITUDE: f64 = 60.0;
    pub const MAX_AMPLITUDE: f64 = 300.0;

    pub fn validate(&self) -> Result<()> {
        if !(Self::MIN_AMPLITUDE..=Self::MAX_AMPLITUDE).contains(&self.amplitude) {
            return Err(Error::invalid(
                "stimulus amplitude",
                format!(
                    "{} V is outside the driver range {}-{} V",
                    self.amplitude,
                    Self::MIN_AMPLITUDE,
                    Self::MAX_AMPLITUDE
                ),
            ));
        }
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(Error::invalid(
                "stimulus frequency",
                format!("{} must be positive", self.frequency),
            ));
        }
        Ok(())
    }

    /// Frequency actually generated when sampled with `adc`.
    pub fn effective_frequency(&self, adc: &AdcConfig) -> Result<f64> {
        if self.coherent {
            dsp::snap_frequency(self.frequency, adc.sampling_rate, adc.sample_count)
        } else {
            Ok(self.frequency)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontEndConfig {
    /// Ohms.
    pub sense_resistance: f64,
    /// Level shift added by the summing amplifier before the divider, volts.
    pub summing_offset: f64,
    pub divider_ratio: f64,
    /// ADC full-scale voltage.
    pub adc_reference: f64,
}

impl Default for FrontEndConfig {
    fn default() -> Self {
        // 165 V through a 1/100 divider sits at mid-rail of a 3.3 V ADC.
        Self {
            sense_resistance: 10e6,
            summing_offset: 165.0,
            divider_ratio: 0.01,
            adc_reference: 3.3,
        }
    }
}

impl FrontEndConfig {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("sense resistance", self.sense_resistance),
            ("summing offset", self.summing_offset),
            ("ADC reference", self.adc_reference),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(what, format!("{v} must be positive")));
            }
        }
        if !(self.divider_ratio > 0.0 && self.divider_ratio <= 1.0) {
            return Err(Error::invalid(
                "divider ratio",
                format!("{} is outside (0, 1]", self.divider_ratio),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdcConfig {
    pub sampling_rate: f64,
    pub sample_count: usize,
    pub resolution_bits: u8,
    /// Standard deviation of the additive input noise, in LSB.
    pub noise_sigma: f64,
}

impl Default for AdcConfig {
    fn default() -> Self {
        Self {
            sampling_rate: 200e3,
            sample_count: 256,
            resolution_bits: 12,
            noise_sigma: 1.0,
        }
    }
}

impl AdcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_rate > 0.0 && self.sampling_rate.is_finite()) {
            return Err(Error::invalid(
                "sampling rate",
                format!("{} must be positive", self.sampling_rate),
            ));
        }
        if !self.sample_count.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(self.sample_count));
        }
        if !(8..=16).contains(&self.resolution_bits) {
            return Err(Error::invalid(
                "ADC resolution",
                format!("{} bits is outside 8-16", self.resolution_bits),
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid(
                "noise sigma",
                format!("{} must be non-negative", self.noise_sigma),
            ));
        }
        Ok(())
    }

    pub fn full_scale_code(&self) -> u16 {
        ((1u32 << self.resolution_bits) - 1) as u16
    }

    /// Time needed to collect one buffer, seconds.
    pub fn acquisition_time(&self) -> f64 {
        self.sample_count as f64 / self.sampling_rate
    }
}

/// One ADC capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformBuffer {
    pub samples: Vec<u16>,
    pub sampling_rate: f64,
    /// Volts per code.
    pub lsb: f64,
    /// Frequency of the stimulus that produced the capture.
    pub stimulus_frequency: f64,
}

impl WaveformBuffer {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Steady-state voltage presented to the ADC at time `t`.
///
/// Each edge of the square wave starts an exponential of amplitude
/// `V/(1 + e^{-T/2τ})`, which is the swing left after the previous half-period
/// has partially discharged. The stimulus rises at `t = 0` and the waveform
/// is right-continuous at its edges.
pub fn analog_response(
    c_dut: f64,
    stimulus: &StimulusConfig,
    frontend: &FrontEndConfig,
    t: f64,
) -> f64 {
    let tau = frontend.sense_resistance * c_dut;
    let period = 1.0 / stimulus.frequency;
    let half = period / 2.0;
    let peak = stimulus.amplitude / (1.0 + (-half / tau).exp());
    let phase = t.rem_euclid(period);
    let across_r = if phase < half {
        peak * (-phase / tau).exp()
    } else {
        -peak * (-(phase - half) / tau).exp()
    };
    ((across_r + frontend.summing_offset) * frontend.divider_ratio)
        .clamp(0.0, frontend.adc_reference)
}

/// Samples the front end into a quantized buffer.
///
/// The stimulus is delayed by half a sample period so that no sample lands
/// exactly on a switching edge. Gaussian noise in LSB units is added before
/// rounding; a fixed seed always yields the same buffer.
pub fn adc_sample(
    c_dut: f64,
    stimulus: &StimulusConfig,
    frontend: &FrontEndConfig,
    adc: &AdcConfig,
    seed: u64,
) -> Result<WaveformBuffer> {
    stimulus.validate()?;
    frontend.validate()?;
    adc.validate()?;
    if !(c_dut > 0.0) {
        return Err(Error::invalid(
            "DUT capacitance",
            format!("{c_dut} must be positive"),
        ));
    }
    let frequency = stimulus.effective_frequency(adc)?;
    if adc.sampling_rate <= 2.0 * frequency {
        return Err(Error::AboveNyquist {
            frequency,
            nyquist: adc.sampling_rate / 2.0,
        });
    }
    let driven = StimulusConfig {
        frequency,
        ..*stimulus
    };

    let lsb = frontend.adc_reference / f64::from(1u32 << adc.resolution_bits);
    let max_code = adc.full_scale_code();
    let delay = 0.5 / adc.sampling_rate;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = (adc.noise_sigma > 0.0).then(|| {
        Normal::new(0.0, adc.noise_sigma).expect("sigma validated as finite and positive")
    });

    let mut clipped = 0usize;
    let samples = (0..adc.sample_count)
        .map(|k| {
            let t = k as f64 / adc.sampling_rate - delay;
            let mut level = analog_response(c_dut, &driven, frontend, t) / lsb;
            if let Some(noise) = &noise {
                level += noise.sample(&mut rng);
            }
            let raw = level.round();
            if raw < 0.0 || raw > f64::from(max_code) {
                clipped += 1;
            }
            raw.clamp(0.0, f64::from(max_code)) as u16
        })
        .collect::<Vec<_>>();

    if clipped as f64 > SATURATION_LIMIT * adc.sample_count as f64 {
        return Err(Error::Saturation {
            clipped,
            total: adc.sample_count,
        });
    }
    Ok(WaveformBuffer {
        samples,
        sampling_rate: adc.sampling_rate,
        lsb,
        stimulus_frequency: frequency,
    })
}
