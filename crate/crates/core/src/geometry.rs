//! Circular neighbourhoods on the nine sampling planes of a video volume.
//!
//! Every plane passes through the central voxel. The three orthogonal planes
//! (`TOP_*`) are the classic LBP-TOP set; the six intersection planes
//! (`SIP1`..`SIP6`) consist of the two temporal orthogonal planes plus four
//! diagonal planes mixing horizontal, vertical and temporal motion.
//!
//! With `θ = 2π·n/N` the offsets of neighbour `n` are:
//!
//! | plane  | dx          | dy          | dz          |
//! |--------|-------------|-------------|-------------|
//! | SIP1   | `rx·cos θ`  | `0`         | `rz·sin θ`  |
//! | SIP2   | `0`         | `−ry·sin θ` | `rz·cos θ`  |
//! | SIP3   | `rx·cos θ`  | `−ry·sin θ` | `rz·cos θ`  |
//! | SIP4   | `rx·cos θ`  | `−ry·sin θ` | `−rz·cos θ` |
//! | SIP5   | `−rx·cos θ` | `−ry·sin θ` | `−rz·sin θ` |
//! | SIP6   | `rx·cos θ`  | `−ry·sin θ` | `rz·sin θ`  |
//! | TOP_XY | `rx·cos θ`  | `−ry·sin θ` | `0`         |
//! | TOP_XZ | as SIP1     |             |             |
//! | TOP_YZ | as SIP2     |             |             |
//!
//! The diagonal planes are implemented exactly as tabulated; the resulting
//! curves are not re-derived into true circles of the diagonal planes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Components closer than this to an integer are treated as lattice aligned.
pub const LATTICE_EPS: f64 = 1e-9;

/// Admissible neighbour counts.
pub const ADMISSIBLE_POINTS: [usize; 4] = [4, 8, 16, 24];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PlaneId {
    #[serde(rename = "SIP1")]
    Sip1,
    #[serde(rename = "SIP2")]
    Sip2,
    #[serde(rename = "SIP3")]
    Sip3,
    #[serde(rename = "SIP4")]
    Sip4,
    #[serde(rename = "SIP5")]
    Sip5,
    #[serde(rename = "SIP6")]
    Sip6,
    #[serde(rename = "TOP_XY")]
    TopXy,
    #[serde(rename = "TOP_XZ")]
    TopXz,
    #[serde(rename = "TOP_YZ")]
    TopYz,
}

impl PlaneId {
    pub const ALL: [PlaneId; 9] = [
        PlaneId::Sip1,
        PlaneId::Sip2,
        PlaneId::Sip3,
        PlaneId::Sip4,
        PlaneId::Sip5,
        PlaneId::Sip6,
        PlaneId::TopXy,
        PlaneId::TopXz,
        PlaneId::TopYz,
    ];

    /// Planes of the six-intersection-plane descriptor, in concatenation order.
    pub const SIP: [PlaneId; 6] = [
        PlaneId::Sip1,
        PlaneId::Sip2,
        PlaneId::Sip3,
        PlaneId::Sip4,
        PlaneId::Sip5,
        PlaneId::Sip6,
    ];

    /// Planes of LBP-TOP, in concatenation order.
    pub const TOP: [PlaneId; 3] = [PlaneId::TopXy, PlaneId::TopXz, PlaneId::TopYz];

    pub fn name(self) -> &'static str {
        match self {
            PlaneId::Sip1 => "SIP1",
            PlaneId::Sip2 => "SIP2",
            PlaneId::Sip3 => "SIP3",
            PlaneId::Sip4 => "SIP4",
            PlaneId::Sip5 => "SIP5",
            PlaneId::Sip6 => "SIP6",
            PlaneId::TopXy => "TOP_XY",
            PlaneId::TopXz => "TOP_XZ",
            PlaneId::TopYz => "TOP_YZ",
        }
    }
}

impl fmt::Display for PlaneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlaneId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase().replace('-', "_");
        let plane = match upper.as_str() {
            "SIP1" => PlaneId::Sip1,
            "SIP2" => PlaneId::Sip2,
            "SIP3" => PlaneId::Sip3,
            "SIP4" => PlaneId::Sip4,
            "SIP5" => PlaneId::Sip5,
            "SIP6" => PlaneId::Sip6,
            "TOP_XY" | "XY" => PlaneId::TopXy,
            "TOP_XZ" | "XZ" => PlaneId::TopXz,
            "TOP_YZ" | "YZ" => PlaneId::TopYz,
            _ => return Err(Error::Config(format!("unknown plane `{s}`"))),
        };
        Ok(plane)
    }
}

/// Sampling radii along x, y (pixels) and z (frames).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Radii {
    pub x: u32,
    pub y: u32,
    pub z: u32,
}

impl Radii {
    pub const UNIT: Radii = Radii { x: 1, y: 1, z: 1 };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatternConfig {
    n_points: usize,
    radii: Radii,
}

impl PatternConfig {
    pub fn new(n_points: usize, radii: Radii) -> Result<Self> {
        if !ADMISSIBLE_POINTS.contains(&n_points) {
            return Err(Error::Config(format!(
                "neighbour count must be one of {ADMISSIBLE_POINTS:?}, got {n_points}"
            )));
        }
        if radii.x == 0 || radii.y == 0 || radii.z == 0 {
            return Err(Error::Config(format!(
                "radii must be at least 1, got ({}, {}, {})",
                radii.x, radii.y, radii.z
            )));
        }
        Ok(Self { n_points, radii })
    }

    pub fn with_points(n_points: usize) -> Result<Self> {
        Self::new(n_points, Radii::UNIT)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn radii(&self) -> Radii {
        self.radii
    }

    /// Number of histogram bins per plane, `2^N`.
    pub fn bins(&self) -> usize {
        1usize << self.n_points
    }
}

impl Default for PatternConfig {
    fn default() -> Self {
        Self {
            n_points: 8,
            radii: Radii::UNIT,
        }
    }
}

/// Real-valued displacement of a neighbour from the central voxel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOffset<T> {
    pub dx: T,
    pub dy: T,
    pub dz: T,
}

/// One lattice point contributing to an interpolated sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tap<T> {
    pub dx: i32,
    pub dy: i32,
    pub dz: i32,
    pub weight: T,
}

/// Neighbour offsets of one plane together with their interpolation taps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPattern<T> {
    pub plane: PlaneId,
    pub config: PatternConfig,
    pub offsets: Vec<SampleOffset<T>>,
    pub taps: Vec<Vec<Tap<T>>>,
}

impl<T: Scalar> SamplingPattern<T> {
    pub fn new(plane: PlaneId, config: PatternConfig) -> Self {
        let offsets = plane_offsets(plane, config);
        let taps = offsets.iter().map(|o| interpolation_taps(*o)).collect();
        Self {
            plane,
            config,
            offsets,
            taps,
        }
    }

    pub fn n_points(&self) -> usize {
        self.offsets.len()
    }
}

/// Angle of neighbour `index` out of `n_points`.
#[inline]
pub fn neighbour_angle<T: Scalar>(index: usize, n_points: usize) -> T {
    T::of(2.0 * std::f64::consts::PI) * T::of_usize(index) / T::of_usize(n_points)
}

pub fn plane_offsets<T: Scalar>(plane: PlaneId, config: PatternConfig) -> Vec<SampleOffset<T>> {
    let n = config.n_points();
    let r = config.radii();
    let (rx, ry, rz) = (
        T::of(f64::from(r.x)),
        T::of(f64::from(r.y)),
        T::of(f64::from(r.z)),
    );
    let zero = T::zero();
    (0..n)
        .map(|i| {
            let theta: T = neighbour_angle(i, n);
            let (s, c) = theta.sin_cos();
            let (dx, dy, dz) = match plane {
                PlaneId::Sip1 | PlaneId::TopXz => (rx * c, zero, rz * s),
                PlaneId::Sip2 | PlaneId::TopYz => (zero, -(ry * s), rz * c),
                PlaneId::Sip3 => (rx * c, -(ry * s), rz * c),
                PlaneId::Sip4 => (rx * c, -(ry * s), -(rz * c)),
                PlaneId::Sip5 => (-(rx * c), -(ry * s), -(rz * s)),
                PlaneId::Sip6 => (rx * c, -(ry * s), rz * s),
                PlaneId::TopXy => (rx * c, -(ry * s), zero),
            };
            SampleOffset { dx, dy, dz }
        })
        .collect()
}

/// Lattice neighbours and linear weights along one axis.
fn axis_taps<T: Scalar>(v: T) -> ([(i32, T); 2], usize) {
    let nearest = v.round();
    if (v - nearest).abs() < T::of(LATTICE_EPS) {
        let idx = nearest.to_i32().expect("offset fits in i32");
        return ([(idx, T::one()), (0, T::zero())], 1);
    }
    let lo = v.floor();
    let frac = v - lo;
    let idx = lo.to_i32().expect("offset fits in i32");
    ([(idx, T::one() - frac), (idx + 1, frac)], 2)
}

/// Trilinear taps for a non-lattice offset; a single unit tap when every
/// component is integral. Taps are ordered z-major, then y, then x.
pub fn interpolation_taps<T: Scalar>(offset: SampleOffset<T>) -> Vec<Tap<T>> {
    let (xs, nx) = axis_taps(offset.dx);
    let (ys, ny) = axis_taps(offset.dy);
    let (zs, nz) = axis_taps(offset.dz);
    let mut taps = Vec::with_capacity(nx * ny * nz);
    for &(dz, wz) in &zs[..nz] {
        for &(dy, wy) in &ys[..ny] {
            for &(dx, wx) in &xs[..nx] {
                taps.push(Tap {
                    dx,
                    dy,
                    dz,
                    weight: wx * wy * wz,
                });
            }
        }
    }
    taps
}
