//! FFT magnitude extraction at the stimulus frequency.

use std::f64::consts::PI;

pub use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{self, AdcConfig, FrontEndConfig, StimulusConfig, WaveformBuffer};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl Window {
    fn coefficient(self, k: usize, n: usize) -> f64 {
        match self {
            Window::Rectangular => 1.0,
            Window::Hann => 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos(),
        }
    }
}

/// In-place radix-2 decimation-in-time FFT, `X_j = Σ x_k e^{-2πi jk/N}`.
pub fn fft(data: &mut [Complex64]) -> Result<()> {
    transform(data, -1.0)
}

/// Inverse of [`fft`], including the `1/N` factor.
pub fn ifft(data: &mut [Complex64]) -> Result<()> {
    transform(data, 1.0)?;
    let scale = 1.0 / data.len() as f64;
    data.iter_mut().for_each(|x| *x *= scale);
    Ok(())
}

fn transform(data: &mut [Complex64], sign: f64) -> Result<()> {
    let n = data.len();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    if n == 1 {
        return Ok(());
    }

    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = sign * 2.0 * PI / len as f64;
        for k in 0..half {
            // Direct evaluation keeps twiddle error from accumulating.
            let w = Complex64::from_polar(1.0, step * k as f64);
            for start in (0..n).step_by(len) {
                let even = data[start + k];
                let odd = data[start + k + half] * w;
                data[start + k] = even + odd;
                data[start + k + half] = even - odd;
            }
        }
        len <<= 1;
    }
    Ok(())
}

/// Spacing of FFT bins, `f_s / N`.
pub fn bin_width(sampling_rate: f64, sample_count: usize) -> f64 {
    sampling_rate / sample_count as f64
}

/// Index of the bin nearest `frequency`. Must be strictly inside `(0, f_s/2)`.
pub fn nearest_bin(frequency: f64, sampling_rate: f64, sample_count: usize) -> Result<usize> {
    let nyquist = sampling_rate / 2.0;
    if !(frequency > 0.0) {
        return Err(Error::invalid(
            "frequency",
            format!("{frequency} must be positive"),
        ));
    }
    if frequency >= nyquist {
        return Err(Error::AboveNyquist { frequency, nyquist });
    }
    let bin = (frequency / bin_width(sampling_rate, sample_count)).round() as usize;
    if bin >= sample_count / 2 {
        return Err(Error::AboveNyquist { frequency, nyquist });
    }
    Ok(bin)
}

pub fn snap_frequency(frequency: f64, sampling_rate: f64, sample_count: usize) -> Result<f64> {
    let bin = nearest_bin(frequency, sampling_rate, sample_count)?;
    Ok(bin as f64 * bin_width(sampling_rate, sample_count))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bins: Vec<Complex64>,
    pub bin_width: f64,
}

/// Raw (unnormalised) bin modulus at the stimulus frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Magnitude {
    pub value: f64,
    /// Centre frequency of the bin that was read.
    pub frequency: f64,
    pub bin_index: usize,
}

impl Spectrum {
    pub fn from_buffer(buffer: &WaveformBuffer, window: Window) -> Result<Self> {
        let n = buffer.len();
        let mut bins = buffer
            .samples
            .iter()
            .enumerate()
            .map(|(k, &s)| Complex64::new(f64::from(s) * window.coefficient(k, n), 0.0))
            .collect::<Vec<_>>();
        fft(&mut bins)?;
        Ok(Self {
            bins,
            bin_width: bin_width(buffer.sampling_rate, n),
        })
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn sampling_rate(&self) -> f64 {
        self.bin_width * self.bins.len() as f64
    }

    /// Reads the bin nearest `stimulus_frequency`.
    pub fn magnitude_at(&self, stimulus_frequency: f64) -> Result<Magnitude> {
        let bin = nearest_bin(stimulus_frequency, self.sampling_rate(), self.len())?;
        Ok(Magnitude {
            value: self.bins[bin].norm(),
            frequency: bin as f64 * self.bin_width,
            bin_index: bin,
        })
    }
}

/// Everything needed to measure one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingConfig {
    pub stimulus: StimulusConfig,
    pub frontend: FrontEndConfig,
    pub adc: AdcConfig,
    pub window: Window,
    /// Simulated FFT and bookkeeping time per channel, seconds.
    pub processing_allowance: f64,
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self {
            stimulus: StimulusConfig::default(),
            frontend: FrontEndConfig::default(),
            adc: AdcConfig::default(),
            window: Window::Rectangular,
            processing_allowance: 0.5e-3,
        }
    }
}

impl SensingConfig {
    pub fn validate(&self) -> Result<()> {
        self.stimulus.validate()?;
        self.frontend.validate()?;
        self.adc.validate()?;
        if !(self.processing_allowance >= 0.0 && self.processing_allowance.is_finite()) {
            return Err(Error::invalid(
                "processing allowance",
                format!("{} must be non-negative", self.processing_allowance),
            ));
        }
        Ok(())
    }

    /// Simulated time to measure one channel: acquisition plus processing.
    pub fn channel_time(&self) -> f64 {
        self.adc.acquisition_time() + self.processing_allowance
    }

    pub fn with_frequency(&self, frequency: f64) -> Self {
        let mut config = *self;
        config.stimulus.frequency = frequency;
        config
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub magnitude: Magnitude,
    /// Simulated elapsed time, seconds.
    pub elapsed: f64,
}

/// Sample, transform and read out one channel.
pub fn measure_channel(c_dut: f64, config: &SensingConfig, seed: u64) -> Result<Measurement> {
    config.validate()?;
    let buffer =
        frontend::adc_sample(c_dut, &config.stimulus, &config.frontend, &config.adc, seed)?;
    let spectrum = Spectrum::from_buffer(&buffer, config.window)?;
    let magnitude = spectrum.magnitude_at(config.stimulus.frequency)?;
    Ok(Measurement {
        magnitude,
        elapsed: config.channel_time(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|j| {
                x.iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        v * Complex64::from_polar(1.0, -2.0 * PI * ((j * k) % n) as f64 / n as f64)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn zeros_and_impulse() {
        let mut z = vec![Complex64::default(); 64];
        fft(&mut z).unwrap();
        assert!(z.iter().all(|c| c.norm() == 0.0));

        let mut d = vec![Complex64::default(); 64];
        d[0] = Complex64::new(1.0, 0.0);
        fft(&mut d).unwrap();
        assert!(d
            .iter()
            .all(|c| (*c - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn rejects_non_power_of_two() {
        let mut x = vec![Complex64::default(); 12];
        assert_eq!(fft(&mut x), Err(Error::NotPowerOfTwo(12)));
    }

    #[test]
    fn matches_naive_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [1usize, 2, 4, 8, 256] {
            let x: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let expected = naive_dft(&x);
            let mut y = x.clone();
            fft(&mut y).unwrap();
            for (a, b) in y.iter().zip(&expected) {
                assert!((a - b).norm() <= 1e-9 * b.norm().max(1.0));
            }
            ifft(&mut y).unwrap();
            for (a, b) in y.iter().zip(&x) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bin_snapping_examples() {
        assert_eq!(bin_width(200e3, 256), 781.25);
        assert_eq!(nearest_bin(12e3, 200e3, 256).unwrap(), 15);
        assert_eq!(snap_frequency(12e3, 200e3, 256).unwrap(), 11_718.75);
        assert_eq!(nearest_bin(30e3, 200e3, 256).unwrap(), 38);
        assert_eq!(snap_frequency(30e3, 200e3, 256).unwrap(), 29_687.5);
        assert_eq!(snap_frequency(10e3, 200e3, 256).unwrap(), 10_156.25);
        assert!(matches!(
            nearest_bin(100e3, 200e3, 256),
            Err(Error::AboveNyquist { .. })
        ));
        assert!(nearest_bin(99_900.0, 200e3, 256).is_err());
    }

    #[test]
    fn coherent_tone_magnitude() {
        let n = 256;
        let amplitude = 3.0;
        let bin = 15;
        let mut x: Vec<Complex64> = (0..n)
            .map(|k| {
                Complex64::new(
                    amplitude * (2.0 * PI * (bin * k) as f64 / n as f64).cos(),
                    0.0,
                )
            })
            .collect();
        fft(&mut x).unwrap();
        let s = Spectrum {
            bins: x,
            bin_width: 781.25,
        };
        let m = s.magnitude_at(12e3).unwrap();
        assert_eq!(m.bin_index, 15);
        assert_eq!(m.frequency, 11_718.75);
        assert_relative_eq!(m.value, amplitude * n as f64 / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn measure_channel_timing_and_ordering() {
        let config = SensingConfig::default();
        let water = measure_channel(1.240_631e-12, &config, 1).unwrap();
        let oil = measure_channel(2.509_458e-13, &config, 1).unwrap();
        let open = measure_channel(5e-14, &config, 1).unwrap();
        assert_relative_eq!(water.elapsed, 1.78e-3, max_relative = 1e-12);
        assert!(water.elapsed < 2e-3);
        assert!(water.magnitude.value > oil.magnitude.value);
        assert!(oil.magnitude.value > 3.0 * open.magnitude.value);
        assert_eq!(water.magnitude.bin_index, 15);
    }
}
