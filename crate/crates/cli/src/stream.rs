//! JSON-lines status-map stream: one document per scan.

use std::io::BufRead;

use dmfsense::{ChannelState, HexArray, StatusMap, Zone, ZoneAssignment};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const STATUS_MAP_SCHEMA: &str = "dmfsense/status-map/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatusMapRecord {
    pub schema: String,
    pub scan_index: usize,
    pub tick: usize,
    /// Seconds.
    pub scan_elapsed: f64,
    pub electrodes: Vec<ElectrodeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectrodeRecord {
    pub index: usize,
    pub q: i32,
    pub r: i32,
    pub zone: Zone,
    pub pin: u8,
    pub magnitude: f64,
    pub elapsed: f64,
    pub state: ChannelState,
}

impl StatusMapRecord {
    pub fn from_map(array: &HexArray, map: &StatusMap) -> Self {
        let electrodes = array
            .electrodes()
            .iter()
            .map(|e| {
                let z = array.zone_of(e.index);
                ElectrodeRecord {
                    index: e.index,
                    q: e.q,
                    r: e.r,
                    zone: z.zone,
                    pin: z.pin,
                    magnitude: map.magnitudes[e.index],
                    elapsed: map.channel_elapsed[e.index],
                    state: map.states[e.index],
                }
            })
            .collect();
        Self {
            schema: STATUS_MAP_SCHEMA.to_string(),
            scan_index: map.scan_index,
            tick: map.tick,
            scan_elapsed: map.scan_elapsed,
            electrodes,
        }
    }

    pub fn to_map(&self) -> StatusMap {
        StatusMap {
            scan_index: self.scan_index,
            tick: self.tick,
            states: self.electrodes.iter().map(|e| e.state).collect(),
            magnitudes: self.electrodes.iter().map(|e| e.magnitude).collect(),
            channel_elapsed: self.electrodes.iter().map(|e| e.elapsed).collect(),
            scan_elapsed: self.scan_elapsed,
        }
    }

    /// Side length of the centered hexagon with this many electrodes.
    fn side(&self) -> Option<usize> {
        let n = self.electrodes.len();
        (1..=n.max(1)).find(|s| 3 * s * (s - 1) + 1 == n)
    }
}

/// Parsed stream together with the array geometry it describes.
#[derive(Debug, Clone)]
pub struct ScanStream {
    pub array: Option<HexArray>,
    pub maps: Vec<StatusMap>,
}

/// Reads a status-map stream. Blank lines are skipped; every other line must
/// be a status-map document over the same array.
pub fn read_stream(reader: impl BufRead, origin: &str) -> Result<ScanStream> {
    let mut array: Option<HexArray> = None;
    let mut maps = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let at = || format!("{origin}:{lineno}");
        let line = line.map_err(|e| CliError::io(at(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: StatusMapRecord =
            serde_json::from_str(&line).map_err(|e| CliError::parse(at(), e))?;
        if record.schema != STATUS_MAP_SCHEMA {
            return Err(CliError::parse(
                at(),
                format!(
                    "expected schema `{STATUS_MAP_SCHEMA}`, found `{}`",
                    record.schema
                ),
            ));
        }
        let side = record.side().ok_or_else(|| {
            CliError::parse(
                at(),
                format!(
                    "{} electrodes do not form a centered hexagon",
                    record.electrodes.len()
                ),
            )
        })?;
        let expected = match &array {
            Some(a) if a.side() == side => a.clone(),
            Some(a) => {
                return Err(CliError::parse(
                    at(),
                    format!("array side {side} differs from earlier side {}", a.side()),
                ))
            }
            None => {
                let routing = record
                    .electrodes
                    .iter()
                    .map(|e| ZoneAssignment {
                        zone: e.zone,
                        pin: e.pin,
                    })
                    .collect();
                HexArray::new(side)
                    .and_then(|a| a.with_routing(routing))
                    .map_err(|e| CliError::parse(at(), e))?
            }
        };
        for (i, (e, cell)) in record
            .electrodes
            .iter()
            .zip(expected.electrodes())
            .enumerate()
        {
            let route = expected.zone_of(i);
            if e.index != i
                || e.q != cell.q
                || e.r != cell.r
                || e.zone != route.zone
                || e.pin != route.pin
            {
                return Err(CliError::parse(
                    at(),
                    format!(
                        "electrode entry {i} is ({}, {}) #{} on {}{}, expected ({}, {}) #{i} on {}{}",
                        e.q, e.r, e.index, e.zone, e.pin, cell.q, cell.r, route.zone, route.pin
                    ),
                ));
            }
        }
        maps.push(record.to_map());
        array = Some(expected);
    }
    Ok(ScanStream { array, maps })
}
