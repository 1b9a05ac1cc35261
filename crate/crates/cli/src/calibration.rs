//! Calibration file: thresholds plus the inputs that produced them.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use dmfsense::dsp::SensingConfig;
use dmfsense::{DeviceGeometry, Thresholds};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const CALIBRATION_SCHEMA: &str = "dmfsense/calibration/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationFile {
    pub schema: String,
    pub thresholds: Thresholds,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub seed: u64,
    /// Seconds since the Unix epoch; taken from `SOURCE_DATE_EPOCH` when set.
    pub timestamp: u64,
    pub array_side: usize,
    pub medium: String,
    pub droplet_liquid: String,
    pub geometry: DeviceGeometry,
    pub sensing: SensingConfig,
}

/// Current time for provenance stamps. `SOURCE_DATE_EPOCH` pins it so that
/// repeated runs produce identical files.
pub fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

impl CalibrationFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("calibration serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let file: CalibrationFile = serde_json::from_str(text)
            .map_err(|e| CliError::parse(format!("{origin}:{}:{}", e.line(), e.column()), e))?;
        if file.schema != CALIBRATION_SCHEMA {
            return Err(CliError::parse(
                format!("{origin}: schema"),
                format!("expected `{CALIBRATION_SCHEMA}`, found `{}`", file.schema),
            ));
        }
        file.thresholds
            .validate()
            .map_err(|e| CliError::parse(format!("{origin}: thresholds"), e))?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(path.display().to_string(), e))?;
        Self::from_json(&text, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unordered_thresholds() {
        let file = CalibrationFile {
            schema: CALIBRATION_SCHEMA.into(),
            thresholds: Thresholds {
                t1: 10.0,
                t2: 5.0,
                stimulus_frequency: 11_718.75,
            },
            provenance: Provenance {
                seed: 0,
                timestamp: 0,
                array_side: 8,
                medium: "oil".into(),
                droplet_liquid: "water".into(),
                geometry: DeviceGeometry::default(),
                sensing: SensingConfig::default(),
            },
        };
        let err = CalibrationFile::from_json(&file.to_json(), "c.json").unwrap_err();
        assert!(
            matches!(err, CliError::Parse { ref location, .. } if location == "c.json: thresholds")
        );
    }
}
