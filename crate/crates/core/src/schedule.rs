//! Bond schedules for brickwork and staircase circuits.
//!
//! One brickwork layer is one time unit. One staircase sweep applies twice as
//! many gates and counts as two time units; for emission purposes a sweep is
//! split into two halves, each reported at an integer time.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    Brickwork,
    Staircase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Open,
    Periodic,
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Geometry::Brickwork => "bw",
            Geometry::Staircase => "s",
        })
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "obc",
            Boundary::Periodic => "pbc",
        })
    }
}

impl FromStr for Geometry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bw" | "brickwork" => Ok(Geometry::Brickwork),
            "s" | "staircase" => Ok(Geometry::Staircase),
            other => Err(Error::Parse(format!("unknown geometry '{other}' (expected bw or s)"))),
        }
    }
}

impl FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "obc" | "open" => Ok(Boundary::Open),
            "pbc" | "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::Parse(format!("unknown boundary '{other}' (expected obc or pbc)"))),
        }
    }
}

/// Nearest-neighbour bond. `right == (left + 1) % len`; the kernel's first
/// site is `left`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bond {
    pub left: usize,
    pub right: usize,
}

impl Bond {
    pub fn new(left: usize, right: usize) -> Self {
        Self { left, right }
    }

    pub fn is_wrap(&self) -> bool {
        self.right < self.left
    }

    pub fn validate(&self, len: usize) -> Result<()> {
        let ok = self.left < len && self.right < len && self.right == (self.left + 1) % len && len >= 2;
        if ok {
            Ok(())
        } else {
            Err(Error::BondOutOfRange { left: self.left, right: self.right, len })
        }
    }
}

/// Bonds applied during one emitted time unit.
#[derive(Debug, Clone, Copy)]
pub struct Tick<'a> {
    /// Integer time reached after these bonds.
    pub time: usize,
    /// Fractional time reached after these bonds (equal to `time` for
    /// brickwork, may differ by a fraction of a gate for staircases).
    pub elapsed: f64,
    pub bonds: &'a [Bond],
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSchedule {
    len: usize,
    geometry: Geometry,
    boundary: Boundary,
    layers: Vec<Vec<Bond>>,
    time_units_per_layer: f64,
    total_time_units: usize,
}

pub const MIN_SITES: usize = 4;

pub fn build_schedule(
    geometry: Geometry,
    boundary: Boundary,
    len: usize,
    total_time_units: usize,
) -> Result<LayerSchedule> {
    if len < MIN_SITES {
        return Err(Error::TooSmall { len, min: MIN_SITES });
    }
    if geometry == Geometry::Brickwork && boundary == Boundary::Periodic && len % 2 == 1 {
        return Err(Error::InvalidGeometry(format!(
            "periodic brickwork needs an even number of sites, got L = {len}"
        )));
    }
    let (layers, per_layer) = match geometry {
        Geometry::Brickwork => {
            let even: Vec<Bond> = (0..len - 1).step_by(2).map(|i| Bond::new(i, i + 1)).collect();
            let odd_end = if boundary == Boundary::Periodic { len } else { len - 1 };
            let odd: Vec<Bond> = (1..odd_end).step_by(2).map(|i| Bond::new(i, (i + 1) % len)).collect();
            let layers = (0..total_time_units)
                .map(|t| if t % 2 == 0 { even.clone() } else { odd.clone() })
                .collect();
            (layers, 1.0)
        }
        Geometry::Staircase => {
            let mut sweep: Vec<Bond> = (0..len - 1).map(|i| Bond::new(i, i + 1)).collect();
            if boundary == Boundary::Periodic {
                sweep.push(Bond::new(len - 1, 0));
            }
            let sweeps = total_time_units.div_ceil(2);
            (vec![sweep; sweeps], 2.0)
        }
    };
    Ok(LayerSchedule { len, geometry, boundary, layers, time_units_per_layer: per_layer, total_time_units })
}

impl LayerSchedule {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.total_time_units == 0
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn layers(&self) -> &[Vec<Bond>] {
        &self.layers
    }

    pub fn time_units_per_layer(&self) -> f64 {
        self.time_units_per_layer
    }

    pub fn total_time_units(&self) -> usize {
        self.total_time_units
    }

    /// Bonds grouped by emitted time unit, in application order.
    pub fn ticks(&self) -> Vec<Tick<'_>> {
        let mut out = Vec::with_capacity(self.total_time_units);
        match self.geometry {
            Geometry::Brickwork => {
                for (t, layer) in self.layers.iter().enumerate() {
                    out.push(Tick { time: t + 1, elapsed: (t + 1) as f64, bonds: layer });
                }
            }
            Geometry::Staircase => {
                for (s, sweep) in self.layers.iter().enumerate() {
                    let n = sweep.len();
                    let half = n.div_ceil(2);
                    let base = 2.0 * s as f64;
                    out.push(Tick {
                        time: 2 * s + 1,
                        elapsed: base + 2.0 * half as f64 / n as f64,
                        bonds: &sweep[..half],
                    });
                    out.push(Tick { time: 2 * s + 2, elapsed: base + 2.0, bonds: &sweep[half..] });
                }
            }
        }
        out.truncate(self.total_time_units);
        out
    }
}
