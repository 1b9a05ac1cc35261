//! Array scanning, fault injection and scripted droplet scenarios.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{self, ChannelState, Thresholds};
use crate::derive_seed;
use crate::device::{self, ChannelOccupancy, DeviceGeometry, LiquidLibrary};
use crate::dsp::{self, Measurement, SensingConfig};
use crate::error::{Error, Result};
use crate::hexarray::{Axial, HexArray, Zone};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Every channel routed through this connector is disconnected.
    ZoneCut(Zone),
    ChannelOpen(Axial),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub faults: Vec<Fault>,
}

impl FaultSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(faults: Vec<Fault>) -> Self {
        Self { faults }
    }

    pub fn zones(zones: &[Zone]) -> Self {
        Self::new(zones.iter().map(|&z| Fault::ZoneCut(z)).collect())
    }

    pub fn validate(&self, array: &HexArray) -> Result<()> {
        for f in &self.faults {
            if let Fault::ChannelOpen(at) = f {
                array.locate(*at)?;
            }
        }
        Ok(())
    }

    /// Per-electrode fault flags, indexed by linear index.
    pub fn mask(&self, array: &HexArray) -> Result<Vec<bool>> {
        let mut mask = vec![false; array.len()];
        for f in &self.faults {
            match *f {
                Fault::ZoneCut(zone) => array.zone_members(zone).for_each(|i| mask[i] = true),
                Fault::ChannelOpen(at) => mask[array.locate(at)?.index] = true,
            }
        }
        Ok(mask)
    }
}

/// One classified snapshot of the whole array. Vectors are indexed by the
/// electrode's linear index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusMap {
    pub scan_index: usize,
    pub tick: usize,
    pub states: Vec<ChannelState>,
    pub magnitudes: Vec<f64>,
    pub channel_elapsed: Vec<f64>,
    /// Sum of `channel_elapsed`, accumulated in scan order.
    pub scan_elapsed: f64,
}

impl StatusMap {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn count(&self, state: ChannelState) -> usize {
        self.states.iter().filter(|&&s| s == state).count()
    }

    /// Linear indices classified as carrying a droplet, ascending.
    pub fn droplets(&self) -> Vec<usize> {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == ChannelState::ConnectedDroplet)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Labeled magnitudes used to place thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSamples {
    pub open: Vec<f64>,
    pub medium: Vec<f64>,
    pub droplet: Vec<f64>,
    pub frequency: f64,
}

/// A simulated instrument: array, device physics and sensing chain.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub array: HexArray,
    pub geometry: DeviceGeometry,
    pub library: LiquidLibrary,
    pub config: SensingConfig,
}

impl Simulator {
    pub fn new(
        array: HexArray,
        geometry: DeviceGeometry,
        library: LiquidLibrary,
        config: SensingConfig,
    ) -> Result<Self> {
        geometry.validate()?;
        config.validate()?;
        Ok(Self {
            array,
            geometry,
            library,
            config,
        })
    }

    /// Frequency of the bin the thresholds apply to.
    pub fn readout_frequency(&self) -> Result<f64> {
        dsp::snap_frequency(
            self.config.stimulus.frequency,
            self.config.adc.sampling_rate,
            self.config.adc.sample_count,
        )
    }

    /// Simulated duration of one full scan.
    pub fn scan_elapsed_model(&self) -> f64 {
        scan_elapsed_model(self.array.len(), &self.config)
    }

    pub fn uniform(&self, occupancy: ChannelOccupancy) -> Vec<ChannelOccupancy> {
        vec![occupancy; self.array.len()]
    }

    fn measure_all(
        &self,
        occupancies: &[ChannelOccupancy],
        faulted: &[bool],
        order: &[usize],
        seed: u64,
    ) -> Result<Vec<Measurement>> {
        if occupancies.len() != self.array.len() {
            return Err(Error::invalid(
                "occupancy map",
                format!(
                    "{} entries for {} electrodes",
                    occupancies.len(),
                    self.array.len()
                ),
            ));
        }
        let generated = self.config.stimulus.effective_frequency(&self.config.adc)?;
        order
            .par_iter()
            .map(|&i| {
                let occupancy = if faulted[i] {
                    &ChannelOccupancy::Open
                } else {
                    &occupancies[i]
                };
                let c =
                    device::dut_capacitance(&self.geometry, occupancy, &self.library, generated)?;
                dsp::measure_channel(c, &self.config, derive_seed(seed, i as u64))
            })
            .collect()
    }

    /// Measures and classifies every electrode in zone-then-pin order.
    /// Faulted channels are simulated as open circuits whatever sits on them.
    pub fn scan_all(
        &self,
        occupancies: &[ChannelOccupancy],
        faults: &FaultSpec,
        thresholds: &Thresholds,
        seed: u64,
        scan_index: usize,
    ) -> Result<StatusMap> {
        self.scan_in_order(
            occupancies,
            faults,
            thresholds,
            seed,
            scan_index,
            &self.array.scan_order(),
        )
    }

    pub(crate) fn scan_in_order(
        &self,
        occupancies: &[ChannelOccupancy],
        faults: &FaultSpec,
        thresholds: &Thresholds,
        seed: u64,
        scan_index: usize,
        order: &[usize],
    ) -> Result<StatusMap> {
        thresholds.validate()?;
        let readout = self.readout_frequency()?;
        let half_bin =
            dsp::bin_width(self.config.adc.sampling_rate, self.config.adc.sample_count) / 2.0;
        if !((thresholds.stimulus_frequency - readout).abs() < half_bin) {
            return Err(Error::Uncalibrated(format!(
                "thresholds were calibrated at {} Hz but the scan reads {} Hz",
                thresholds.stimulus_frequency, readout
            )));
        }
        let faulted = faults.mask(&self.array)?;
        let seed = derive_seed(seed, scan_index as u64);
        let readings = self.measure_all(occupancies, &faulted, order, seed)?;

        let n = self.array.len();
        let mut map = StatusMap {
            scan_index,
            tick: scan_index,
            states: vec![ChannelState::BadConnection; n],
            magnitudes: vec![0.0; n],
            channel_elapsed: vec![0.0; n],
            scan_elapsed: 0.0,
        };
        for (&i, reading) in order.iter().zip(&readings) {
            let m = reading.magnitude.value;
            map.states[i] = classify::classify(m, thresholds);
            map.magnitudes[i] = m;
            map.channel_elapsed[i] = reading.elapsed;
            map.scan_elapsed += reading.elapsed;
        }
        Ok(map)
    }

    /// Simulates every electrode as open, as `medium` and as a `droplet` of
    /// the given liquid. Faults are not applied.
    pub fn calibration_samples(
        &self,
        medium: &str,
        droplet: &str,
        seed: u64,
    ) -> Result<CalibrationSamples> {
        let order = self.array.scan_order();
        let clean = vec![false; self.array.len()];
        let classes = [
            ChannelOccupancy::Open,
            ChannelOccupancy::Medium(medium.to_string()),
            ChannelOccupancy::Droplet(droplet.to_string()),
        ];
        let mut sets = classes.iter().enumerate().map(|(k, occupancy)| {
            let occ = self.uniform(occupancy.clone());
            self.measure_all(
                &occ,
                &clean,
                &order,
                derive_seed(seed, 0xCA11_0000 + k as u64),
            )
            .map(|r| r.iter().map(|m| m.magnitude.value).collect::<Vec<_>>())
        });
        let open = sets.next().expect("three classes")?;
        let medium = sets.next().expect("three classes")?;
        let droplet = sets.next().expect("three classes")?;
        Ok(CalibrationSamples {
            open,
            medium,
            droplet,
            frequency: self.readout_frequency()?,
        })
    }

    pub fn calibrate(&self, medium: &str, droplet: &str, seed: u64) -> Result<Thresholds> {
        let s = self.calibration_samples(medium, droplet, seed)?;
        classify::calibrate(&s.open, &s.medium, &s.droplet, s.frequency)
    }

    /// Advances the scenario by one tick and scans if the tick is a detection
    /// step.
    pub fn step_scenario(
        &self,
        scenario: &Scenario,
        state: &mut ScenarioState,
    ) -> Result<Option<StatusMap>> {
        let tick = state.tick;
        if !scenario.script.is_empty() {
            state.occupancies =
                scenario
                    .script
                    .occupancies_at(&self.array, &scenario.medium, tick)?;
        }
        let map = if scenario.script.detects(tick) {
            let mut map = self.scan_all(
                &state.occupancies,
                &scenario.faults,
                &scenario.thresholds,
                scenario.seed,
                state.scans,
            )?;
            map.tick = tick;
            state.scans += 1;
            state.elapsed += map.scan_elapsed;
            Some(map)
        } else {
            None
        };
        state.elapsed += scenario.script.detection_interval;
        state.tick += 1;
        Ok(map)
    }

    /// Runs the whole scenario. An empty script still produces one scan.
    pub fn run_scenario(&self, scenario: &Scenario) -> Result<Vec<StatusMap>> {
        scenario.validate(self)?;
        let mut state = ScenarioState::new(self.array.len(), &scenario.medium);
        let ticks = scenario.script.ticks().max(1);
        let mut maps = Vec::new();
        for _ in 0..ticks {
            if let Some(map) = self.step_scenario(scenario, &mut state)? {
                maps.push(map);
            }
        }
        Ok(maps)
    }
}

/// Simulated duration of scanning `channels` electrodes.
pub fn scan_elapsed_model(channels: usize, config: &SensingConfig) -> f64 {
    channels as f64 * config.channel_time()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropletPath {
    pub liquid: String,
    /// Position at each tick; the droplet rests on its last waypoint once
    /// the path is exhausted.
    pub waypoints: Vec<Axial>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MovementScript {
    pub droplets: Vec<DropletPath>,
    /// Whether to scan after each tick. Ticks beyond the list are scanned.
    pub detect: Vec<bool>,
    /// Simulated pause between movement steps, seconds.
    pub detection_interval: f64,
}

impl MovementScript {
    pub fn is_empty(&self) -> bool {
        self.droplets.is_empty()
    }

    pub fn ticks(&self) -> usize {
        self.droplets
            .iter()
            .map(|d| d.waypoints.len())
            .max()
            .unwrap_or(0)
    }

    pub fn detects(&self, tick: usize) -> bool {
        self.detect.get(tick).copied().unwrap_or(true)
    }

    pub fn position(&self, droplet: usize, tick: usize) -> Option<Axial> {
        let w = &self.droplets.get(droplet)?.waypoints;
        w.get(tick.min(w.len().checked_sub(1)?)).copied()
    }

    fn check_collisions(&self, tick: usize) -> Result<()> {
        let mut seen = Vec::with_capacity(self.droplets.len());
        for d in 0..self.droplets.len() {
            if let Some(at) = self.position(d, tick) {
                if seen.contains(&at) {
                    return Err(Error::Collision {
                        tick,
                        q: at.q,
                        r: at.r,
                    });
                }
                seen.push(at);
            }
        }
        Ok(())
    }

    /// Checks addresses, step sizes, liquids and collisions at every tick.
    pub fn validate(&self, array: &HexArray, library: &LiquidLibrary) -> Result<()> {
        for (d, path) in self.droplets.iter().enumerate() {
            library.get(&path.liquid)?;
            if path.waypoints.is_empty() {
                return Err(Error::Script(format!("droplet {d} has no waypoints")));
            }
            for at in &path.waypoints {
                array.locate(*at)?;
            }
            for (step, w) in path.waypoints.windows(2).enumerate() {
                if w[0].distance(w[1]) > 1 {
                    return Err(Error::Script(format!(
                        "droplet {d} jumps from {} to {} at step {}",
                        w[0],
                        w[1],
                        step + 1
                    )));
                }
            }
        }
        if !(self.detection_interval >= 0.0) {
            return Err(Error::Script(
                "detection interval must be non-negative".into(),
            ));
        }
        (0..self.ticks()).try_for_each(|t| self.check_collisions(t))
    }

    /// Droplet electrodes hold their liquid; everything else holds `medium`.
    pub fn occupancies_at(
        &self,
        array: &HexArray,
        medium: &str,
        tick: usize,
    ) -> Result<Vec<ChannelOccupancy>> {
        self.check_collisions(tick)?;
        let mut occ = vec![ChannelOccupancy::Medium(medium.to_string()); array.len()];
        for (d, path) in self.droplets.iter().enumerate() {
            if let Some(at) = self.position(d, tick) {
                occ[array.locate(at)?.index] = ChannelOccupancy::Droplet(path.liquid.clone());
            }
        }
        Ok(occ)
    }
}

/// Inputs that stay fixed for a scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub medium: String,
    pub faults: FaultSpec,
    pub script: MovementScript,
    pub thresholds: Thresholds,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self, sim: &Simulator) -> Result<()> {
        sim.library.get(&self.medium)?;
        self.faults.validate(&sim.array)?;
        self.script.validate(&sim.array, &sim.library)?;
        self.thresholds.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioState {
    pub occupancies: Vec<ChannelOccupancy>,
    pub tick: usize,
    pub scans: usize,
    /// Simulated time since the start, seconds.
    pub elapsed: f64,
}

impl ScenarioState {
    pub fn new(channels: usize, medium: &str) -> Self {
        Self {
            occupancies: vec![ChannelOccupancy::Medium(medium.to_string()); channels],
            tick: 0,
            scans: 0,
            elapsed: 0.0,
        }
    }
}
