//! Scenario file schema and its resolution into simulator inputs.

use std::collections::BTreeMap;
use std::path::Path;

use dmfsense::dsp::SensingConfig;
use dmfsense::{
    AdcConfig, Axial, DeviceGeometry, DropletPath, Error as CoreError, Fault, FaultSpec,
    FrontEndConfig, HexArray, Liquid, LiquidLibrary, MovementScript, Simulator, StimulusConfig,
    Window, Zone, ZoneAssignment,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCENARIO_SCHEMA: &str = "dmfsense/scenario/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_side")]
    pub array_side: usize,
    #[serde(default)]
    pub geometry: DeviceGeometry,
    #[serde(default)]
    pub stimulus: StimulusConfig,
    #[serde(default)]
    pub frontend: FrontEndConfig,
    #[serde(default)]
    pub adc: AdcConfig,
    #[serde(default)]
    pub dsp: DspSection,
    /// Liquid name to a constant permittivity or a dispersion table.
    pub liquids: BTreeMap<String, LiquidSpec>,
    /// Liquid filling the gap around droplets.
    pub medium: String,
    /// Liquid used for the droplet class during calibration and as the
    /// default for scripted droplets.
    pub droplet_liquid: String,
    #[serde(default)]
    pub routing: Option<Vec<RoutingEntry>>,
    #[serde(default)]
    pub faults: Vec<Fault>,
    #[serde(default)]
    pub script: ScriptSection,
}

fn default_side() -> usize {
    8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DspSection {
    pub window: Window,
    pub processing_allowance: f64,
}

impl Default for DspSection {
    fn default() -> Self {
        let s = SensingConfig::default();
        Self {
            window: s.window,
            processing_allowance: s.processing_allowance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LiquidSpec {
    Constant(f64),
    Dispersive { dispersion: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingEntry {
    pub q: i32,
    pub r: i32,
    pub zone: Zone,
    pub pin: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScriptSection {
    pub detection_interval: f64,
    pub detect: Vec<bool>,
    pub droplets: Vec<DropletSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropletSpec {
    #[serde(default)]
    pub liquid: Option<String>,
    /// `[q, r]` waypoints, one per tick.
    pub path: Vec<(i32, i32)>,
}

/// A scenario with every cross-reference resolved.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub simulator: Simulator,
    pub medium: String,
    pub droplet_liquid: String,
    pub faults: FaultSpec,
    pub script: MovementScript,
    pub seed: u64,
}

impl ScenarioFile {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)
            .map_err(|e| CliError::parse(format!("{origin}:{}:{}", e.line(), e.column()), e))?;
        if file.schema != SCENARIO_SCHEMA {
            return Err(CliError::parse(
                format!("{origin}: schema"),
                format!("expected `{SCENARIO_SCHEMA}`, found `{}`", file.schema),
            ));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(path.display().to_string(), e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn sensing(&self) -> SensingConfig {
        SensingConfig {
            stimulus: self.stimulus,
            frontend: self.frontend,
            adc: self.adc,
            window: self.dsp.window,
            processing_allowance: self.dsp.processing_allowance,
        }
    }

    pub fn resolve(&self, origin: &str) -> Result<ResolvedScenario> {
        let at = |path: &str| format!("{origin}: {path}");

        let mut library = LiquidLibrary::new();
        for (name, spec) in &self.liquids {
            let liquid = match spec {
                LiquidSpec::Constant(eps) => Liquid::new(name.clone(), *eps),
                LiquidSpec::Dispersive { dispersion } => {
                    Liquid::dispersive(name.clone(), dispersion.clone())
                }
            };
            liquid
                .and_then(|l| library.insert(l))
                .map_err(|e| CliError::parse(at(&format!("liquids.{name}")), e))?;
        }
        for (field, name) in [
            ("medium", &self.medium),
            ("droplet_liquid", &self.droplet_liquid),
        ] {
            if !library.contains(name) {
                return Err(CliError::parse(
                    at(field),
                    CoreError::UnknownLiquid(name.clone()),
                ));
            }
        }

        self.geometry
            .validate()
            .map_err(|e| CliError::parse(at("geometry"), e))?;
        let sensing = self.sensing();
        sensing
            .validate()
            .map_err(|e| CliError::parse(at("stimulus/frontend/adc/dsp"), e))?;

        let mut array =
            HexArray::new(self.array_side).map_err(|e| CliError::parse(at("array_side"), e))?;
        if let Some(routing) = &self.routing {
            array = resolve_routing(array, routing, &at)?;
        }

        for (i, fault) in self.faults.iter().enumerate() {
            if let Fault::ChannelOpen(addr) = fault {
                array
                    .locate(*addr)
                    .map_err(|e| CliError::parse(at(&format!("faults[{i}]")), e))?;
            }
        }

        let mut droplets = Vec::with_capacity(self.script.droplets.len());
        for (d, spec) in self.script.droplets.iter().enumerate() {
            let liquid = spec
                .liquid
                .clone()
                .unwrap_or_else(|| self.droplet_liquid.clone());
            if !library.contains(&liquid) {
                return Err(CliError::parse(
                    at(&format!("script.droplets[{d}].liquid")),
                    CoreError::UnknownLiquid(liquid),
                ));
            }
            let mut waypoints = Vec::with_capacity(spec.path.len());
            for (k, &(q, r)) in spec.path.iter().enumerate() {
                let p = Axial::new(q, r);
                array.locate(p).map_err(|e| {
                    CliError::parse(at(&format!("script.droplets[{d}].path[{k}]")), e)
                })?;
                waypoints.push(p);
            }
            droplets.push(DropletPath { liquid, waypoints });
        }
        let script = MovementScript {
            droplets,
            detect: self.script.detect.clone(),
            detection_interval: self.script.detection_interval,
        };
        match script.validate(&array, &library) {
            Ok(()) => {}
            Err(e @ CoreError::Collision { .. }) => return Err(CliError::Collision(e)),
            Err(e) => return Err(CliError::parse(at("script"), e)),
        }

        let simulator = Simulator::new(array, self.geometry, library, sensing)
            .map_err(|e| CliError::parse(at("scenario"), e))?;
        Ok(ResolvedScenario {
            simulator,
            medium: self.medium.clone(),
            droplet_liquid: self.droplet_liquid.clone(),
            faults: FaultSpec::new(self.faults.clone()),
            script,
            seed: self.seed,
        })
    }
}

fn resolve_routing(
    array: HexArray,
    entries: &[RoutingEntry],
    at: &dyn Fn(&str) -> String,
) -> Result<HexArray> {
    let mut table: Vec<Option<ZoneAssignment>> = vec![None; array.len()];
    for (i, e) in entries.iter().enumerate() {
        let loc = at(&format!("routing[{i}]"));
        let addr = array
            .locate(Axial::new(e.q, e.r))
            .map_err(|err| CliError::parse(loc.clone(), err))?;
        if table[addr.index].is_some() {
            return Err(CliError::parse(
                loc,
                format!("electrode ({}, {}) routed twice", e.q, e.r),
            ));
        }
        table[addr.index] = Some(ZoneAssignment {
            zone: e.zone,
            pin: e.pin,
        });
    }
    let routing = table
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            a.ok_or_else(|| {
                let e = array.electrodes()[i];
                CliError::parse(
                    at("routing"),
                    format!("electrode ({}, {}) has no route", e.q, e.r),
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;
    array
        .with_routing(routing)
        .map_err(|e| CliError::parse(at("routing"), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "schema": SCENARIO_SCHEMA,
            "liquids": { "water": 80.0, "silicone_oil": 2.0 },
            "medium": "silicone_oil",
            "droplet_liquid": "water"
        })
    }

    fn resolve(v: serde_json::Value) -> Result<ResolvedScenario> {
        ScenarioFile::from_json(&v.to_string(), "s.json")?.resolve("s.json")
    }

    #[test]
    fn minimal_scenario_uses_defaults() {
        let r = resolve(base()).unwrap();
        assert_eq!(r.simulator.array.len(), 169);
        assert_eq!(r.simulator.config, SensingConfig::default());
        assert!(r.script.is_empty());
    }

    #[test]
    fn unknown_liquid_has_location() {
        let mut v = base();
        v["script"] = serde_json::json!({ "droplets": [ { "liquid": "milk", "path": [[0, 0]] } ] });
        match resolve(v).unwrap_err() {
            CliError::Parse { location, .. } => {
                assert_eq!(location, "s.json: script.droplets[0].liquid")
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn bad_address_has_location() {
        let mut v = base();
        v["script"] = serde_json::json!({ "droplets": [ { "path": [[0, 0], [9, 0]] } ] });
        match resolve(v).unwrap_err() {
            CliError::Parse { location, .. } => {
                assert_eq!(location, "s.json: script.droplets[0].path[1]")
            }
            e => panic!("{e}"),
        }
        let mut v = base();
        v["faults"] =
            serde_json::json!([ { "zone_cut": "B" }, { "channel_open": { "q": 0, "r": 8 } } ]);
        assert!(
            matches!(resolve(v), Err(CliError::Parse { location, .. }) if location.ends_with("faults[1]"))
        );
    }

    #[test]
    fn syntax_error_has_line_and_column() {
        let err = ScenarioFile::from_json("{\n  \"schema\": ,\n}", "x.json").unwrap_err();
        match err {
            CliError::Parse { location, .. } => assert!(location.starts_with("x.json:2:")),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn collision_is_its_own_error() {
        let mut v = base();
        v["script"] = serde_json::json!({ "droplets": [
            { "path": [[0, 0], [1, 0]] },
            { "path": [[2, 0], [1, 0]] }
        ] });
        let err = resolve(v).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::exit::SCENARIO_COLLISION);
        assert!(err.to_string().contains("tick 1"));
    }

    #[test]
    fn dispersive_liquids_and_routing_override() {
        let mut v = base();
        v["array_side"] = serde_json::json!(2);
        v["liquids"]["oleylamine"] =
            serde_json::json!({ "dispersion": [[8000.0, 2.5], [10000.0, 20.0]] });
        let cells = [(0, -1), (1, -1), (-1, 0), (0, 0), (1, 0), (-1, 1), (0, 1)];
        v["routing"] = serde_json::Value::Array(
            cells
                .iter()
                .enumerate()
                .map(
                    |(i, (q, r))| serde_json::json!({ "q": q, "r": r, "zone": "C", "pin": 10 + i }),
                )
                .collect(),
        );
        let r = resolve(v.clone()).unwrap();
        assert_eq!(
            r.simulator.array.zone_of(0),
            ZoneAssignment {
                zone: Zone::C,
                pin: 10
            }
        );
        assert!(r.simulator.library.contains("oleylamine"));

        v["routing"].as_array_mut().unwrap().pop();
        assert!(resolve(v).is_err());
    }

    #[test]
    fn wrong_schema_rejected() {
        let mut v = base();
        v["schema"] = serde_json::json!("other/v9");
        assert!(resolve(v).is_err());
    }
}
