//! Reconstruction of droplet paths from successive status maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hexarray::{ElectrodeAddress, HexArray};
use crate::scan::StatusMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub scan_index: usize,
    pub address: ElectrodeAddress,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub droplet_id: usize,
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    fn last(&self) -> &TrajectoryPoint {
        self.points
            .last()
            .expect("trajectories start with one point")
    }
}

/// A detection that was reachable from more than one droplet at the same
/// distance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ambiguity {
    pub scan_index: usize,
    pub detection: usize,
    pub candidates: Vec<usize>,
    pub chosen: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackOutcome {
    pub trajectories: Vec<Trajectory>,
    pub ambiguities: Vec<Ambiguity>,
}

pub fn track(array: &HexArray, maps: &[StatusMap]) -> Result<Vec<Trajectory>> {
    Ok(track_detailed(array, maps)?.trajectories)
}

/// Greedy nearest-neighbour association between consecutive scans.
///
/// A detection may extend a trajectory only if it lies within one hex step
/// of the trajectory's position in the previous scan. Pairs are taken in order
/// of distance, then detection index, then the droplet's previous electrode
/// index. Detections left over start new trajectories.
pub fn track_detailed(array: &HexArray, maps: &[StatusMap]) -> Result<TrackOutcome> {
    let mut out = TrackOutcome::default();
    // Indices into `out.trajectories` that were seen in the previous scan.
    let mut active: Vec<usize> = Vec::new();

    for map in maps {
        if map.len() != array.len() {
            return Err(Error::invalid(
                "status map",
                format!(
                    "scan {} has {} channels, array has {}",
                    map.scan_index,
                    map.len(),
                    array.len()
                ),
            ));
        }
        let detections = map.droplets();

        let mut pairs = Vec::new();
        for &d in &detections {
            let at = array.electrodes()[d].axial();
            for &t in &active {
                let prev = out.trajectories[t].last().address;
                let dist = prev.axial().distance(at);
                if dist <= 1 {
                    pairs.push((dist, d, prev.index, t));
                }
            }
        }
        pairs.sort_unstable();

        for &d in &detections {
            let best: Vec<_> = pairs.iter().filter(|p| p.1 == d).collect();
            if let Some(first) = best.first() {
                let tied: Vec<usize> = best
                    .iter()
                    .filter(|p| p.0 == first.0)
                    .map(|p| out.trajectories[p.3].droplet_id)
                    .collect();
                if tied.len() > 1 {
                    log::info!(
                        "scan {}: electrode {} equidistant from droplets {:?}",
                        map.scan_index,
                        d,
                        tied
                    );
                    out.ambiguities.push(Ambiguity {
                        scan_index: map.scan_index,
                        detection: d,
                        candidates: tied,
                        chosen: out.trajectories[first.3].droplet_id,
                    });
                }
            }
        }

        let mut taken_detection = vec![false; array.len()];
        let mut taken_track = vec![false; out.trajectories.len()];
        let mut next_active = Vec::new();
        for (_, d, _, t) in pairs {
            if taken_detection[d] || taken_track[t] {
                continue;
            }
            taken_detection[d] = true;
            taken_track[t] = true;
            out.trajectories[t].points.push(TrajectoryPoint {
                scan_index: map.scan_index,
                address: array.electrodes()[d],
            });
            next_active.push(t);
        }
        for &d in &detections {
            if !taken_detection[d] {
                let id = out.trajectories.len();
                out.trajectories.push(Trajectory {
                    droplet_id: id,
                    points: vec![TrajectoryPoint {
                        scan_index: map.scan_index,
                        address: array.electrodes()[d],
                    }],
                });
                next_active.push(id);
            }
        }
        next_active.sort_unstable();
        active = next_active;
    }
    Ok(out)
}

/// Number of droplet detections in each map.
pub fn droplet_counts(maps: &[StatusMap]) -> Vec<usize> {
    maps.iter().map(|m| m.droplets().len()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::ChannelState;
    use crate::hexarray::Axial;

    fn map_with(array: &HexArray, scan_index: usize, droplets: &[Axial]) -> StatusMap {
        let n = array.len();
        let mut states = vec![ChannelState::ConnectedIdle; n];
        for at in droplets {
            states[array.locate(*at).unwrap().index] = ChannelState::ConnectedDroplet;
        }
        StatusMap {
            scan_index,
            tick: scan_index,
            states,
            magnitudes: vec![0.0; n],
            channel_elapsed: vec![0.0; n],
            scan_elapsed: 0.0,
        }
    }

    #[test]
    fn empty_input() {
        let array = HexArray::new(8).unwrap();
        assert!(track(&array, &[]).unwrap().is_empty());
    }

    #[test]
    fn follows_single_path() {
        let array = HexArray::new(8).unwrap();
        let path = [
            Axial::new(0, 0),
            Axial::new(1, 0),
            Axial::new(1, 1),
            Axial::new(1, 1),
            Axial::new(0, 2),
        ];
        let maps: Vec<_> = path
            .iter()
            .enumerate()
            .map(|(i, &p)| map_with(&array, i, &[p]))
            .collect();
        let tracks = track(&array, &maps).unwrap();
        assert_eq!(tracks.len(), 1);
        let got: Vec<_> = tracks[0].points.iter().map(|p| p.address.axial()).collect();
        assert_eq!(got, path);
    }

    #[test]
    fn jump_starts_new_trajectory() {
        let array = HexArray::new(8).unwrap();
        let maps = vec![
            map_with(&array, 0, &[Axial::new(0, 0)]),
            map_with(&array, 1, &[Axial::new(3, 0)]),
        ];
        assert_eq!(track(&array, &maps).unwrap().len(), 2);
    }

    #[test]
    fn equidistant_detection_goes_to_lowest_index() {
        let array = HexArray::new(8).unwrap();
        // Two droplets two steps apart; the middle electrode is one step from both.
        let left = Axial::new(-1, 0);
        let right = Axial::new(1, 0);
        let maps = vec![
            map_with(&array, 0, &[left, right]),
            map_with(&array, 1, &[Axial::new(0, 0), Axial::new(2, 0)]),
        ];
        let out = track_detailed(&array, &maps).unwrap();
        assert_eq!(out.trajectories.len(), 2);
        let left_id = out
            .trajectories
            .iter()
            .find(|t| t.points[0].address.axial() == left)
            .unwrap()
            .droplet_id;
        assert_eq!(out.ambiguities.len(), 1);
        assert_eq!(out.ambiguities[0].chosen, left_id);
        assert_eq!(
            out.trajectories[left_id].points[1].address.axial(),
            Axial::new(0, 0)
        );
    }

    #[test]
    fn rejects_foreign_geometry() {
        let array = HexArray::new(8).unwrap();
        let small = HexArray::new(2).unwrap();
        let maps = vec![map_with(&small, 0, &[])];
        assert!(track(&array, &maps).is_err());
    }
}
