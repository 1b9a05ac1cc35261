//! Addressing of the hexagonal electrode array and its connector zones.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channels per connector zone.
pub const PINS_PER_ZONE: u8 = 60;

/// Axial hex coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Axial {
    pub q: i32,
    pub r: i32,
}

impl Axial {
    pub const DIRECTIONS: [Axial; 6] = [
        Axial { q: 1, r: 0 },
        Axial { q: 1, r: -1 },
        Axial { q: 0, r: -1 },
        Axial { q: -1, r: 0 },
        Axial { q: -1, r: 1 },
        Axial { q: 0, r: 1 },
    ];

    pub const fn new(q: i32, r: i32) -> Self {
        Self { q, r }
    }

    pub fn s(self) -> i32 {
        -self.q - self.r
    }

    pub fn offset(self, d: Axial) -> Axial {
        Axial::new(self.q + d.q, self.r + d.r)
    }

    pub fn distance(self, other: Axial) -> u32 {
        let dq = (self.q - other.q).abs();
        let dr = (self.r - other.r).abs();
        let ds = (self.s() - other.s()).abs();
        dq.max(dr).max(ds) as u32
    }

    /// Distance from the centre.
    pub fn ring(self) -> u32 {
        self.distance(Axial::new(0, 0))
    }
}

impl fmt::Display for Axial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.q, self.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ElectrodeAddress {
    pub q: i32,
    pub r: i32,
    pub index: usize,
}

impl ElectrodeAddress {
    pub fn axial(&self) -> Axial {
        Axial::new(self.q, self.r)
    }
}

/// Centered hexagon of the given side length, ordered by row (`r`) then `q`.
pub fn build_array(side: usize) -> Result<Vec<ElectrodeAddress>> {
    if side == 0 {
        return Err(Error::invalid("array side", "must be at least 1"));
    }
    let radius = (side - 1) as i32;
    let mut out = Vec::with_capacity(3 * side * (side - 1) + 1);
    for r in -radius..=radius {
        for q in -radius..=radius {
            if (q + r).abs() <= radius {
                out.push(ElectrodeAddress {
                    q,
                    r,
                    index: out.len(),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Zone {
    A,
    B,
    C,
}

impl Zone {
    pub const ALL: [Zone; 3] = [Zone::A, Zone::B, Zone::C];
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Zone::A => "A",
            Zone::B => "B",
            Zone::C => "C",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ZoneAssignment {
    pub zone: Zone,
    pub pin: u8,
}

/// Electrode array together with its connector routing.
#[derive(Debug, Clone, PartialEq)]
pub struct HexArray {
    side: usize,
    electrodes: Vec<ElectrodeAddress>,
    lookup: HashMap<Axial, usize>,
    routing: Vec<ZoneAssignment>,
}

impl HexArray {
    /// Builds the array with the default routing: contiguous blocks of linear
    /// indices, as equal as possible with the larger blocks first, mapped to
    /// zones A, B, C with pins assigned in order.
    pub fn new(side: usize) -> Result<Self> {
        let electrodes = build_array(side)?;
        let n = electrodes.len();
        let base = n / 3;
        let extra = n % 3;
        let sizes = [0, 1, 2].map(|z| base + usize::from(z < extra));
        if sizes[0] > usize::from(PINS_PER_ZONE) {
            return Err(Error::Routing(format!(
                "{n} electrodes exceed the capacity of three {PINS_PER_ZONE}-pin zones"
            )));
        }
        let mut routing = Vec::with_capacity(n);
        for (zone, size) in Zone::ALL.into_iter().zip(sizes) {
            routing.extend((0..size).map(|pin| ZoneAssignment {
                zone,
                pin: pin as u8,
            }));
        }
        let lookup = electrodes.iter().map(|e| (e.axial(), e.index)).collect();
        Ok(Self {
            side,
            electrodes,
            lookup,
            routing,
        })
    }

    /// Replaces the routing. `routing[i]` is the connector pin of electrode `i`.
    pub fn with_routing(mut self, routing: Vec<ZoneAssignment>) -> Result<Self> {
        if routing.len() != self.electrodes.len() {
            return Err(Error::Routing(format!(
                "{} entries for {} electrodes",
                routing.len(),
                self.electrodes.len()
            )));
        }
        let mut seen = HashSet::new();
        for (i, a) in routing.iter().enumerate() {
            if a.pin >= PINS_PER_ZONE {
                return Err(Error::Routing(format!(
                    "electrode {i}: pin {} is beyond {}",
                    a.pin,
                    PINS_PER_ZONE - 1
                )));
            }
            if !seen.insert(*a) {
                return Err(Error::Routing(format!(
                    "electrode {i}: zone {} pin {} is already used",
                    a.zone, a.pin
                )));
            }
        }
        self.routing = routing;
        Ok(self)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.electrodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.electrodes.is_empty()
    }

    pub fn electrodes(&self) -> &[ElectrodeAddress] {
        &self.electrodes
    }

    pub fn electrode(&self, index: usize) -> Option<&ElectrodeAddress> {
        self.electrodes.get(index)
    }

    pub fn locate(&self, at: Axial) -> Result<ElectrodeAddress> {
        self.lookup
            .get(&at)
            .map(|&i| self.electrodes[i])
            .ok_or(Error::OutOfArray { q: at.q, r: at.r })
    }

    pub fn contains(&self, at: Axial) -> bool {
        self.lookup.contains_key(&at)
    }

    /// In-array axial neighbours, at most six.
    pub fn neighbors(&self, at: Axial) -> Result<Vec<ElectrodeAddress>> {
        self.locate(at)?;
        Ok(Axial::DIRECTIONS
            .iter()
            .filter_map(|&d| self.locate(at.offset(d)).ok())
            .collect())
    }

    pub fn zone_of(&self, index: usize) -> ZoneAssignment {
        self.routing[index]
    }

    pub fn routing(&self) -> &[ZoneAssignment] {
        &self.routing
    }

    pub fn zone_members(&self, zone: Zone) -> impl Iterator<Item = usize> + '_ {
        self.routing
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.zone == zone)
            .map(|(i, _)| i)
    }

    /// Connector pins with no electrode attached.
    pub fn spare_pins(&self) -> usize {
        Zone::ALL.len() * usize::from(PINS_PER_ZONE) - self.len()
    }

    /// Electrode indices sorted by zone, then pin.
    pub fn scan_order(&self) -> Vec<usize> {
        let mut order = (0..self.len()).collect::<Vec<_>>();
        order.sort_by_key(|&i| self.routing[i]);
        order
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn centered_hex_counts() {
        assert_eq!(build_array(1).unwrap().len(), 1);
        assert_eq!(build_array(2).unwrap().len(), 7);
        assert_eq!(build_array(8).unwrap().len(), 169);
        assert!(build_array(0).is_err());
    }

    #[test]
    fn neighbor_counts() {
        let a = HexArray::new(8).unwrap();
        assert_eq!(a.neighbors(Axial::new(0, 0)).unwrap().len(), 6);
        for corner in [
            Axial::new(7, 0),
            Axial::new(7, -7),
            Axial::new(0, -7),
            Axial::new(-7, 0),
            Axial::new(-7, 7),
            Axial::new(0, 7),
        ] {
            assert_eq!(a.neighbors(corner).unwrap().len(), 3, "{corner}");
        }
        // Edge but not corner.
        assert_eq!(a.neighbors(Axial::new(7, -3)).unwrap().len(), 4);
        assert_eq!(
            a.neighbors(Axial::new(8, 0)),
            Err(Error::OutOfArray { q: 8, r: 0 })
        );
    }

    #[test]
    fn neighbors_symmetric_and_irreflexive() {
        let a = HexArray::new(8).unwrap();
        for e in a.electrodes() {
            let ns = a.neighbors(e.axial()).unwrap();
            assert!(ns.len() <= 6);
            for n in ns {
                assert_ne!(n.index, e.index);
                assert!(a
                    .neighbors(n.axial())
                    .unwrap()
                    .iter()
                    .any(|m| m.index == e.index));
            }
        }
    }

    #[test]
    fn default_zones() {
        let a = HexArray::new(8).unwrap();
        assert_eq!(
            a.zone_of(0),
            ZoneAssignment {
                zone: Zone::A,
                pin: 0
            }
        );
        assert_eq!(
            a.zone_of(56),
            ZoneAssignment {
                zone: Zone::A,
                pin: 56
            }
        );
        assert_eq!(
            a.zone_of(57),
            ZoneAssignment {
                zone: Zone::B,
                pin: 0
            }
        );
        assert_eq!(
            a.zone_of(113),
            ZoneAssignment {
                zone: Zone::C,
                pin: 0
            }
        );
        let sizes = Zone::ALL.map(|z| a.zone_members(z).count());
        assert_eq!(sizes, [57, 56, 56]);
        assert_eq!(a.spare_pins(), 11);
        let unique: HashSet<_> = a.routing().iter().collect();
        assert_eq!(unique.len(), 169);
    }

    #[test]
    fn routing_override_is_validated() {
        let a = HexArray::new(2).unwrap();
        let dup = vec![
            ZoneAssignment {
                zone: Zone::A,
                pin: 0
            };
            7
        ];
        assert!(a.clone().with_routing(dup).is_err());
        let wide = (0..7)
            .map(|i| ZoneAssignment {
                zone: Zone::C,
                pin: 54 + i,
            })
            .collect::<Vec<_>>();
        assert!(a.clone().with_routing(wide).is_err());
        let reversed = (0..7)
            .map(|i| ZoneAssignment {
                zone: Zone::B,
                pin: 6 - i as u8,
            })
            .collect();
        let b = a.with_routing(reversed).unwrap();
        assert_eq!(b.scan_order(), vec![6, 5, 4, 3, 2, 1, 0]);
    }

    #[test]
    fn too_large_for_connectors() {
        assert!(HexArray::new(9).is_err());
    }

    proptest! {
        #[test]
        fn count_formula(side in 1usize..40) {
            let arr = build_array(side).unwrap();
            prop_assert_eq!(arr.len(), 3 * side * (side - 1) + 1);
            let unique: HashSet<_> = arr.iter().map(|e| (e.q, e.r)).collect();
            prop_assert_eq!(unique.len(), arr.len());
            for (i, e) in arr.iter().enumerate() {
                prop_assert_eq!(e.index, i);
                prop_assert!(e.axial().ring() < side as u32);
            }
        }
    }
}
