//! The three verbs, as library functions so tests can drive them in-process.

use std::io::{BufRead, Write};
use std::path::Path;

use dmfsense::track::{droplet_counts, track_detailed, Ambiguity};
use dmfsense::{HexArray, Scenario, StatusMap};
use serde::{Deserialize, Serialize};

use crate::calibration::{self, CalibrationFile, Provenance, CALIBRATION_SCHEMA};
use crate::error::{CliError, Result};
use crate::render::{self, Format};
use crate::scenario::ScenarioFile;
use crate::stream::read_stream;

pub const TRACK_REPORT_SCHEMA: &str = "dmfsense/track-report/v1";

/// Simulates open, medium and droplet readings on every channel and derives
/// thresholds from them.
pub fn calibrate(scenario: &Path, seed: Option<u64>) -> Result<CalibrationFile> {
    let origin = scenario.display().to_string();
    let file = ScenarioFile::load(scenario)?;
    let resolved = file.resolve(&origin)?;
    let seed = seed.unwrap_or(resolved.seed);
    let thresholds =
        resolved
            .simulator
            .calibrate(&resolved.medium, &resolved.droplet_liquid, seed)?;
    Ok(CalibrationFile {
        schema: CALIBRATION_SCHEMA.to_string(),
        thresholds,
        provenance: Provenance {
            seed,
            timestamp: calibration::timestamp(),
            array_side: file.array_side,
            medium: resolved.medium,
            droplet_liquid: resolved.droplet_liquid,
            geometry: file.geometry,
            sensing: file.sensing(),
        },
    })
}

/// Runs a scenario with stored thresholds. Returns the array so the maps can
/// be rendered.
pub fn scan(
    scenario: &Path,
    calibration: &Path,
    seed: Option<u64>,
) -> Result<(HexArray, Vec<StatusMap>)> {
    let origin = scenario.display().to_string();
    let resolved = ScenarioFile::load(scenario)?.resolve(&origin)?;
    let cal = CalibrationFile::load(calibration)?;
    let run = Scenario {
        medium: resolved.medium,
        faults: resolved.faults,
        script: resolved.script,
        thresholds: cal.thresholds,
        seed: seed.unwrap_or(resolved.seed),
    };
    let maps = resolved.simulator.run_scenario(&run)?;
    Ok((resolved.simulator.array, maps))
}

pub fn write_scan(
    format: Format,
    array: &HexArray,
    maps: &[StatusMap],
    out: &mut dyn Write,
    origin: &str,
) -> Result<()> {
    render::render(format, array, maps, out)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(origin, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackReport {
    pub schema: String,
    pub trajectories: Vec<TrajectoryRecord>,
    pub summary: TrackSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub droplet_id: usize,
    pub waypoints: Vec<Waypoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Waypoint {
    pub scan_index: usize,
    pub tick: usize,
    pub index: usize,
    pub q: i32,
    pub r: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSummary {
    pub scans: usize,
    pub droplet_counts: Vec<TickCount>,
    /// Droplets seen in the first scan; later scans are checked against it.
    pub expected_count: usize,
    pub conservation_violations: Vec<TickCount>,
    pub ambiguities: Vec<Ambiguity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickCount {
    pub scan_index: usize,
    pub tick: usize,
    pub count: usize,
}

/// Builds a trajectory report for maps over `array`.
pub fn track_report(array: Option<&HexArray>, maps: &[StatusMap]) -> Result<TrackReport> {
    let (trajectories, ambiguities) = match array {
        Some(array) => {
            let outcome = track_detailed(array, maps)?;
            (outcome.trajectories, outcome.ambiguities)
        }
        None => (Vec::new(), Vec::new()),
    };
    let tick_of = |scan_index: usize| {
        maps.iter()
            .find(|m| m.scan_index == scan_index)
            .map_or(scan_index, |m| m.tick)
    };
    let counts: Vec<TickCount> = maps
        .iter()
        .zip(droplet_counts(maps))
        .map(|(m, count)| TickCount {
            scan_index: m.scan_index,
            tick: m.tick,
            count,
        })
        .collect();
    let expected_count = counts.first().map_or(0, |c| c.count);
    let conservation_violations = counts
        .iter()
        .filter(|c| c.count != expected_count)
        .copied()
        .collect();
    Ok(TrackReport {
        schema: TRACK_REPORT_SCHEMA.to_string(),
        trajectories: trajectories
            .into_iter()
            .map(|t| TrajectoryRecord {
                droplet_id: t.droplet_id,
                waypoints: t
                    .points
                    .iter()
                    .map(|p| Waypoint {
                        scan_index: p.scan_index,
                        tick: tick_of(p.scan_index),
                        index: p.address.index,
                        q: p.address.q,
                        r: p.address.r,
                    })
                    .collect(),
            })
            .collect(),
        summary: TrackSummary {
            scans: maps.len(),
            droplet_counts: counts,
            expected_count,
            conservation_violations,
            ambiguities,
        },
    })
}

/// Replays a status-map stream produced by `scan --format json`.
pub fn track(input: impl BufRead, origin: &str) -> Result<TrackReport> {
    let stream = read_stream(input, origin)?;
    track_report(stream.array.as_ref(), &stream.maps)
}

impl TrackReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("track report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dmfsense::ChannelState;

    fn map(array: &HexArray, scan_index: usize, droplets: &[usize]) -> StatusMap {
        let n = array.len();
        let mut states = vec![ChannelState::ConnectedIdle; n];
        for &d in droplets {
            states[d] = ChannelState::ConnectedDroplet;
        }
        StatusMap {
            scan_index,
            tick: scan_index * 2,
            states,
            magnitudes: vec![0.0; n],
            channel_elapsed: vec![0.0; n],
            scan_elapsed: 0.0,
        }
    }

    #[test]
    fn summary_flags_count_changes() {
        let array = HexArray::new(8).unwrap();
        let maps = vec![
            map(&array, 0, &[84]),
            map(&array, 1, &[85]),
            map(&array, 2, &[85, 10]),
        ];
        let report = track_report(Some(&array), &maps).unwrap();
        assert_eq!(report.summary.expected_count, 1);
        assert_eq!(
            report.summary.conservation_violations,
            vec![TickCount {
                scan_index: 2,
                tick: 4,
                count: 2
            }]
        );
        assert_eq!(report.trajectories.len(), 2);
        assert_eq!(report.trajectories[0].waypoints.len(), 3);
        assert_eq!(report.trajectories[0].waypoints[1].tick, 2);
    }

    #[test]
    fn empty_report() {
        let report = track_report(None, &[]).unwrap();
        assert!(report.trajectories.is_empty());
        assert_eq!(report.summary.scans, 0);
        assert!(report.summary.conservation_violations.is_empty());
    }
}
