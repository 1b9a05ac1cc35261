//! Equivalent-circuit model of a single electrode/top-plate pair.
//!
//! The dielectric layer and whatever fills the gap (nothing, a medium or a
//! droplet) act as two parallel-plate capacitors in series. The hydrophobic
//! coating is thin enough that its capacitance is ignored.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Permittivity of free space in F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854e-12;

/// Name under which air is always available in a [`LiquidLibrary`].
pub const AIR: &str = "air";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceGeometry {
    /// Plate spacing in metres.
    pub gap_height: f64,
    /// Thickness of the dielectric film over the electrodes, metres.
    pub dielectric_thickness: f64,
    pub dielectric_rel_permittivity: f64,
    /// Across-flats width of a hexagonal electrode, metres.
    pub electrode_across_flats: f64,
    /// Capacitance seen by an unconnected channel, farads.
    pub stray_capacitance: f64,
}

impl Default for DeviceGeometry {
    fn default() -> Self {
        Self {
            gap_height: 200e-6,
            dielectric_thickness: 50e-6,
            dielectric_rel_permittivity: 2.25,
            electrode_across_flats: 2e-3,
            stray_capacitance: 0.05e-12,
        }
    }
}

impl DeviceGeometry {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("gap height", self.gap_height),
            ("dielectric thickness", self.dielectric_thickness),
            ("electrode width", self.electrode_across_flats),
            ("stray capacitance", self.stray_capacitance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(what, format!("{v} must be positive")));
            }
        }
        check_permittivity(self.dielectric_rel_permittivity)
    }

    pub fn electrode_area(&self) -> f64 {
        hexagon_area(self.electrode_across_flats)
    }

    /// Capacitance of the dielectric film under one electrode.
    pub fn dielectric_capacitance(&self) -> f64 {
        VACUUM_PERMITTIVITY * self.dielectric_rel_permittivity * self.electrode_area()
            / self.dielectric_thickness
    }
}

fn check_permittivity(eps: f64) -> Result<()> {
    if eps.is_finite() && eps >= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "relative permittivity",
            format!("{eps} is below 1"),
        ))
    }
}

fn hexagon_area(across_flats: f64) -> f64 {
    3f64.sqrt() / 2.0 * across_flats * across_flats
}

/// Area of a regular hexagon with the given across-flats width.
pub fn electrode_area(across_flats: f64) -> Result<f64> {
    if !(across_flats >= 0.0) || !across_flats.is_finite() {
        return Err(Error::invalid(
            "electrode width",
            format!("{across_flats} is negative"),
        ));
    }
    Ok(hexagon_area(across_flats))
}

/// Parallel-plate capacitance `ε0·εr·A/d`.
pub fn plate_capacitance(rel_permittivity: f64, area: f64, thickness: f64) -> Result<f64> {
    if !(thickness > 0.0) {
        return Err(Error::invalid(
            "plate thickness",
            format!("{thickness} must be positive"),
        ));
    }
    if !(area > 0.0) {
        return Err(Error::invalid(
            "plate area",
            format!("{area} must be positive"),
        ));
    }
    check_permittivity(rel_permittivity)?;
    Ok(VACUUM_PERMITTIVITY * rel_permittivity * area / thickness)
}

pub fn series_capacitance(caps: &[f64]) -> Result<f64> {
    if caps.is_empty() {
        return Err(Error::Empty("capacitor list"));
    }
    let mut inverse = 0.0;
    for &c in caps {
        if !(c > 0.0) {
            return Err(Error::invalid(
                "capacitance",
                format!("{c} must be positive"),
            ));
        }
        inverse += 1.0 / c;
    }
    Ok(1.0 / inverse)
}

/// `|Z| = 1/(2πfC)` for an ideal capacitor.
pub fn impedance_magnitude(capacitance: f64, frequency: f64) -> Result<f64> {
    if !(capacitance > 0.0) {
        return Err(Error::invalid(
            "capacitance",
            format!("{capacitance} must be positive"),
        ));
    }
    if !(frequency > 0.0) {
        return Err(Error::invalid(
            "frequency",
            format!("{frequency} must be positive"),
        ));
    }
    Ok(1.0 / (2.0 * PI * frequency * capacitance))
}

/// Relative permittivity of a liquid, optionally frequency dependent.
#[derive(Debug, Clone, PartialEq)]
pub enum Permittivity {
    Constant(f64),
    /// Sorted `(frequency Hz, εr)` points. Lookups interpolate linearly in
    /// log-frequency and clamp outside the tabulated range.
    Dispersive(Vec<(f64, f64)>),
}

impl Permittivity {
    pub fn dispersive(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("dispersion profile"));
        }
        for &(f, eps) in &points {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::invalid(
                    "dispersion frequency",
                    format!("{f} must be positive"),
                ));
            }
            check_permittivity(eps)?;
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid(
                "dispersion profile",
                "duplicate frequency keys",
            ));
        }
        Ok(Permittivity::Dispersive(points))
    }

    pub fn at(&self, frequency: f64) -> f64 {
        match self {
            Permittivity::Constant(eps) => *eps,
            Permittivity::Dispersive(points) => {
                let first = points[0];
                let last = points[points.len() - 1];
                if frequency <= first.0 {
                    return first.1;
                }
                if frequency >= last.0 {
                    return last.1;
                }
                let hi = points.partition_point(|p| p.0 <= frequency);
                let (f0, e0) = points[hi - 1];
                let (f1, e1) = points[hi];
                let w = (frequency / f0).ln() / (f1 / f0).ln();
                e0 + w * (e1 - e0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Liquid {
    pub name: String,
    pub permittivity: Permittivity,
}

impl Liquid {
    pub fn new(name: impl Into<String>, rel_permittivity: f64) -> Result<Self> {
        check_permittivity(rel_permittivity)?;
        Ok(Self {
            name: name.into(),
            permittivity: Permittivity::Constant(rel_permittivity),
        })
    }

    pub fn dispersive(name: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self> {
        Ok(Self {
            name: name.into(),
            permittivity: Permittivity::dispersive(points)?,
        })
    }
}

/// Named liquids available to occupancies. Air (εr = 1) is always present.
#[derive(Debug, Clone, PartialEq)]
pub struct LiquidLibrary {
    liquids: BTreeMap<String, Liquid>,
}

impl Default for LiquidLibrary {
    fn default() -> Self {
        let mut liquids = BTreeMap::new();
        liquids.insert(
            AIR.to_string(),
            Liquid {
                name: AIR.to_string(),
                permittivity: Permittivity::Constant(1.0),
            },
        );
        Self { liquids }
    }
}

impl LiquidLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a liquid. Air cannot be redefined.
    pub fn insert(&mut self, liquid: Liquid) -> Result<()> {
        if liquid.name == AIR {
            return Err(Error::invalid("liquid", "`air` is built in"));
        }
        self.liquids.insert(liquid.name.clone(), liquid);
        Ok(())
    }

    pub fn with(mut self, liquid: Liquid) -> Result<Self> {
        self.insert(liquid)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Result<&Liquid> {
        self.liquids
            .get(name)
            .ok_or_else(|| Error::UnknownLiquid(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.liquids.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.liquids.keys().map(String::as_str)
    }
}

/// What physically sits on top of one electrode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelOccupancy {
    Open,
    Medium(String),
    Droplet(String),
}

impl ChannelOccupancy {
    pub fn liquid(&self) -> Option<&str> {
        match self {
            ChannelOccupancy::Open => None,
            ChannelOccupancy::Medium(name) | ChannelOccupancy::Droplet(name) => Some(name),
        }
    }
}

/// Capacitance of one device-under-test at `frequency`.
///
/// Medium and droplet occupancies use the same series model; they differ only
/// through the permittivity of the liquid. The frequency only matters for
/// dispersive liquids.
pub fn dut_capacitance(
    geometry: &DeviceGeometry,
    occupancy: &ChannelOccupancy,
    library: &LiquidLibrary,
    frequency: f64,
) -> Result<f64> {
    geometry.validate()?;
    if !(frequency > 0.0) {
        return Err(Error::invalid(
            "frequency",
            format!("{frequency} must be positive"),
        ));
    }
    let name = match occupancy.liquid() {
        None => return Ok(geometry.stray_capacitance),
        Some(name) => name,
    };
    let eps = library.get(name)?.permittivity.at(frequency);
    let area = geometry.electrode_area();
    let gap = plate_capacitance(eps, area, geometry.gap_height)?;
    series_capacitance(&[geometry.dielectric_capacitance(), gap])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn library() -> LiquidLibrary {
        LiquidLibrary::new()
            .with(Liquid::new("water", 80.0).unwrap())
            .unwrap()
            .with(Liquid::new("silicone_oil", 2.0).unwrap())
            .unwrap()
    }

    #[test]
    fn hexagon_area_examples() {
        assert_eq!(electrode_area(0.0).unwrap(), 0.0);
        assert_relative_eq!(electrode_area(2e-3).unwrap(), 3.464e-6, max_relative = 1e-3);
        assert_relative_eq!(electrode_area(1e-3).unwrap(), 8.660e-7, max_relative = 1e-3);
        assert!(electrode_area(-1e-3).is_err());
    }

    #[test]
    fn plate_capacitance_examples() {
        assert_relative_eq!(plate_capacitance(1.0, 1.0, 1.0).unwrap(), 8.854e-12);
        assert_relative_eq!(
            plate_capacitance(80.0, 3.464e-6, 200e-6).unwrap(),
            1.227e-11,
            max_relative = 1e-3
        );
        assert_relative_eq!(
            plate_capacitance(2.0, 3.464e-6, 200e-6).unwrap(),
            3.068e-13,
            max_relative = 1e-3
        );
        assert!(plate_capacitance(2.0, 1.0, 0.0).is_err());
        assert!(plate_capacitance(0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn series_examples() {
        let c = 3.3e-12;
        assert_eq!(series_capacitance(&[c]).unwrap(), c);
        assert_relative_eq!(series_capacitance(&[c, c]).unwrap(), c / 2.0);
        assert_relative_eq!(
            series_capacitance(&[1.380e-12, 1.227e-11]).unwrap(),
            1.241e-12,
            max_relative = 1e-3
        );
        assert!(series_capacitance(&[]).is_err());
        assert!(series_capacitance(&[1e-12, 0.0]).is_err());
    }

    #[test]
    fn dut_capacitance_defaults() {
        let g = DeviceGeometry::default();
        let lib = library();
        let open = dut_capacitance(&g, &ChannelOccupancy::Open, &lib, 12e3).unwrap();
        assert_eq!(open, 5.0e-14);

        // 1 / (1/C_pe + 1/C_gap) with C_pe = ε0·2.25·A/50µm, C_gap = ε0·εr·A/200µm
        let water =
            dut_capacitance(&g, &ChannelOccupancy::Droplet("water".into()), &lib, 12e3).unwrap();
        assert_relative_eq!(water, 1.240_631_0e-12, max_relative = 1e-6);
        assert_relative_eq!(water, 1.241e-12, max_relative = 1e-3);

        let oil = dut_capacitance(
            &g,
            &ChannelOccupancy::Medium("silicone_oil".into()),
            &lib,
            12e3,
        )
        .unwrap();
        assert_relative_eq!(oil, 2.509_458_2e-13, max_relative = 1e-6);
        assert_relative_eq!(oil, 2.512e-13, max_relative = 2e-3);

        let err = dut_capacitance(&g, &ChannelOccupancy::Medium("mercury".into()), &lib, 12e3);
        assert_eq!(err, Err(Error::UnknownLiquid("mercury".into())));
    }

    #[test]
    fn impedance_examples() {
        assert_relative_eq!(
            impedance_magnitude(1.241e-12, 12e3).unwrap(),
            1.069e7,
            max_relative = 1e-3
        );
        let z1 = impedance_magnitude(1e-12, 5e3).unwrap();
        let z2 = impedance_magnitude(1e-12, 10e3).unwrap();
        assert_relative_eq!(z1, 2.0 * z2);
        assert!(impedance_magnitude(0.0, 1e3).is_err());
        assert!(impedance_magnitude(1e-12, -1.0).is_err());
    }

    #[test]
    fn default_ordering() {
        let g = DeviceGeometry::default();
        let lib = library();
        let c = |o: ChannelOccupancy| dut_capacitance(&g, &o, &lib, 12e3).unwrap();
        let water = c(ChannelOccupancy::Droplet("water".into()));
        let oil = c(ChannelOccupancy::Medium("silicone_oil".into()));
        let open = c(ChannelOccupancy::Open);
        assert!(water > oil && oil > open);
    }

    #[test]
    fn dispersion_interpolates_in_log_frequency() {
        let p = Permittivity::dispersive(vec![(10e3, 10.0), (1e3, 2.0)]).unwrap();
        assert_eq!(p.at(500.0), 2.0);
        assert_eq!(p.at(1e6), 10.0);
        assert_relative_eq!(p.at(10f64.powf(3.5)), 6.0, max_relative = 1e-12);
        assert!(Permittivity::dispersive(vec![(0.0, 2.0)]).is_err());
        assert!(Permittivity::dispersive(vec![(1e3, 0.5)]).is_err());
    }

    #[test]
    fn air_is_builtin() {
        let mut lib = LiquidLibrary::new();
        assert!(lib.contains(AIR));
        assert!(lib.insert(Liquid::new(AIR, 3.0).unwrap()).is_err());
    }
}
