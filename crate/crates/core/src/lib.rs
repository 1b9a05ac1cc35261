//! Simulation and detection library for impedance sensing on
//! digital-microfluidic electrode arrays.
//!
//! The pipeline runs from the equivalent-circuit [`device`] model through the
//! [`frontend`] waveform simulation and the [`dsp`] FFT readout to
//! [`classify`], which turns a magnitude into one of three channel states.
//! [`scan`] sweeps the whole [`hexarray`] with optional connector faults and
//! scripted droplet motion, and [`track`] rebuilds droplet paths from the
//! resulting status maps.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod device;
pub mod dsp;
pub mod error;
pub mod frontend;
pub mod hexarray;
pub mod scan;
pub mod track;

pub use classify::{
    best_frequency, calibrate, classify, identify_liquid, ChannelState, FrequencyMap,
    Identification, IdentifyOptions, LiquidSignature, SampleClass, Thresholds,
};
pub use device::{
    dut_capacitance, impedance_magnitude, ChannelOccupancy, DeviceGeometry, Liquid, LiquidLibrary,
    Permittivity,
};
pub use dsp::{measure_channel, Magnitude, Measurement, SensingConfig, Spectrum, Window};
pub use error::{Error, Result};
pub use frontend::{AdcConfig, FrontEndConfig, StimulusConfig, WaveformBuffer};
pub use hexarray::{Axial, ElectrodeAddress, HexArray, Zone, ZoneAssignment};
pub use scan::{
    DropletPath, Fault, FaultSpec, MovementScript, Scenario, ScenarioState, Simulator, StatusMap,
};
pub use track::{track, Trajectory, TrajectoryPoint};

/// Mixes a base seed with a stream number (splitmix64 finaliser), giving
/// independent per-channel and per-scan noise streams.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
