//! Feature-difference curves against the first (neutral) frame and apex
//! selection.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PlaneId;
use crate::lbp::FrameDescriptor;
use crate::scalar::Scalar;

/// Curves whose maximum falls below this are reported as flat.
pub const FLAT_EPSILON: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    AllPlanes,
    Plane(PlaneId),
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::AllPlanes => f.write_str("all"),
            Scope::Plane(p) => write!(f, "{p}"),
        }
    }
}

/// `values[t - 1]` is the squared distance between frame `t` and frame 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdCurve<T> {
    pub values: Vec<T>,
    pub planes: Vec<PlaneId>,
    pub scope: Scope,
}

impl<T: Scalar> FdCurve<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotResult<T> {
    /// 1-based.
    pub apex_frame: usize,
    pub peak_value: T,
    pub flat: bool,
    pub curve: FdCurve<T>,
}

pub fn fd_curve<T: Scalar>(descriptors: &[FrameDescriptor<T>], scope: Scope) -> Result<FdCurve<T>> {
    let Some(first) = descriptors.first() else {
        return Err(Error::Invalid("no descriptors to compare".into()));
    };
    if descriptors.len() < 2 {
        return Err(Error::Invalid(
            "feature differences need at least two frames".into(),
        ));
    }
    for d in descriptors {
        if d.values.len() != first.values.len() || d.planes != first.planes {
            return Err(Error::DescriptorLength {
                frame: d.frame_index,
                expected: first.values.len(),
                found: d.values.len(),
            });
        }
    }
    let range = match scope {
        Scope::AllPlanes => 0..first.values.len(),
        Scope::Plane(p) => {
            let k = first
                .planes
                .iter()
                .position(|&q| q == p)
                .ok_or(Error::PlaneNotInDescriptor(p))?;
            k * first.bins_per_plane..(k + 1) * first.bins_per_plane
        }
    };
    let baseline = &first.values[range.clone()];
    let values = descriptors
        .iter()
        .map(|d| {
            baseline
                .iter()
                .zip(&d.values[range.clone()])
                .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
        })
        .collect();
    Ok(FdCurve {
        values,
        planes: first.planes.clone(),
        scope,
    })
}

/// Earliest frame attaining the maximum feature difference.
pub fn spot_apex<T: Scalar>(curve: FdCurve<T>) -> SpotResult<T> {
    let mut apex = 0;
    let mut peak = curve.values.first().copied().unwrap_or_else(T::zero);
    for (i, &v) in curve.values.iter().enumerate().skip(1) {
        if v > peak {
            apex = i;
            peak = v;
        }
    }
    SpotResult {
        apex_frame: apex + 1,
        peak_value: peak,
        flat: peak < T::of(FLAT_EPSILON),
        curve,
    }
}

/// All-planes spot plus one spot per plane segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneSpots<T> {
    pub all: SpotResult<T>,
    pub planes: BTreeMap<PlaneId, SpotResult<T>>,
}

pub fn per_plane_spots<T: Scalar>(descriptors: &[FrameDescriptor<T>]) -> Result<PlaneSpots<T>> {
    let all = spot_apex(fd_curve(descriptors, Scope::AllPlanes)?);
    let planes = all
        .curve
        .planes
        .iter()
        .map(|&p| Ok((p, spot_apex(fd_curve(descriptors, Scope::Plane(p))?))))
        .collect::<Result<_>>()?;
    Ok(PlaneSpots { all, planes })
}
