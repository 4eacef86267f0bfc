//! Literal nested-loop extractor used as an equivalence oracle.
//!
//! Recomputes the neighbour angle, offset and interpolation weights for
//! every voxel and every neighbour, shares no code with the cached
//! [`Extractor`](crate::lbp::Extractor) beyond the volume type, and runs on
//! a single thread. Floating point operations are issued in the same order
//! as the fast path so the two agree bit for bit.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{PatternConfig, PlaneId, LATTICE_EPS};
use crate::lbp::{DescriptorKind, FrameDescriptor};
use crate::scalar::Scalar;
use crate::volume::GrayVolume;

fn offset<T: Scalar>(plane: PlaneId, n: usize, count: usize, r: [T; 3]) -> [T; 3] {
    let theta = T::of(2.0 * PI) * T::of_usize(n) / T::of_usize(count);
    let c = theta.cos();
    let s = theta.sin();
    let [rx, ry, rz] = r;
    match plane {
        PlaneId::Sip1 => [rx * c, T::zero(), rz * s],
        PlaneId::Sip2 => [T::zero(), -(ry * s), rz * c],
        PlaneId::Sip3 => [rx * c, -(ry * s), rz * c],
        PlaneId::Sip4 => [rx * c, -(ry * s), -(rz * c)],
        PlaneId::Sip5 => [-(rx * c), -(ry * s), -(rz * s)],
        PlaneId::Sip6 => [rx * c, -(ry * s), rz * s],
        PlaneId::TopXy => [rx * c, -(ry * s), T::zero()],
        PlaneId::TopXz => [rx * c, T::zero(), rz * s],
        PlaneId::TopYz => [T::zero(), -(ry * s), rz * c],
    }
}

/// Lattice points and weights along one axis.
fn axis<T: Scalar>(v: T) -> Vec<(i64, T)> {
    let r = v.round();
    if (v - r).abs() < T::of(LATTICE_EPS) {
        vec![(r.to_i64().unwrap(), T::one())]
    } else {
        let f = v.floor();
        let i = f.to_i64().unwrap();
        vec![(i, T::one() - (v - f)), (i + 1, v - f)]
    }
}

/// Interpolated neighbour minus the centre value.
fn difference<T: Scalar>(volume: &GrayVolume<T>, x: usize, y: usize, z: usize, off: [T; 3]) -> T {
    let centre = volume.get(x, y, z);
    let depth = volume.depth() as i64;
    let mut acc = T::zero();
    for (kz, wz) in axis(off[2]) {
        for (ky, wy) in axis(off[1]) {
            for (kx, wx) in axis(off[0]) {
                let zz = (z as i64 + kz).max(0).min(depth - 1) as usize;
                let yy = (y as i64 + ky) as usize;
                let xx = (x as i64 + kx) as usize;
                acc += wx * wy * wz * (volume.get(xx, yy, zz) - centre);
            }
        }
    }
    acc
}

/// Same contract as [`extract_descriptors`](crate::lbp::extract_descriptors).
pub fn reference_extract<T: Scalar>(
    volume: &GrayVolume<T>,
    kind: DescriptorKind,
    config: PatternConfig,
) -> Result<Vec<FrameDescriptor<T>>> {
    let rad = config.radii();
    let (rx, ry) = (rad.x as usize, rad.y as usize);
    let (w, h, d) = (volume.width(), volume.height(), volume.depth());
    if w < 2 * rx + 1 || h < 2 * ry + 1 {
        return Err(Error::VolumeTooSmall {
            width: w,
            height: h,
            depth: d,
            rx: rad.x,
            ry: rad.y,
            rz: rad.z,
        });
    }
    let r = [
        T::of(f64::from(rad.x)),
        T::of(f64::from(rad.y)),
        T::of(f64::from(rad.z)),
    ];
    let n = config.n_points();
    let bins = 1usize << n;
    let planes = kind.planes();

    let mut out = Vec::with_capacity(d);
    for z in 0..d {
        let mut values = Vec::with_capacity(bins * planes.len());
        for &plane in &planes {
            let mut hist = vec![0u64; bins];
            for y in ry..h - ry {
                for x in rx..w - rx {
                    let mut code = 0usize;
                    for p in 0..n {
                        if difference(volume, x, y, z, offset(plane, p, n, r)) >= T::zero() {
                            code += 1 << p;
                        }
                    }
                    hist[code] += 1;
                }
            }
            let total: u64 = hist.iter().sum();
            if total == 0 {
                return Err(Error::EmptyHistogram(plane));
            }
            for count in hist {
                values.push(T::of(count as f64 / total as f64));
            }
        }
        out.push(FrameDescriptor {
            frame_index: z + 1,
            planes: planes.clone(),
            bins_per_plane: bins,
            values,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_volume_is_one_hot() {
        let v = GrayVolume::constant(6, 5, 2, 9.0f64).unwrap();
        let ds = reference_extract(&v, DescriptorKind::SipL, PatternConfig::default()).unwrap();
        for d in ds {
            for (_, seg) in d.segments() {
                assert_eq!(seg[255], 1.0);
                assert_eq!(seg.iter().filter(|&&v| v != 0.0).count(), 1);
            }
        }
    }

    #[test]
    fn single_interior_pixel() {
        let v = GrayVolume::from_fn(3, 3, 2, |x, y, z| (x + 3 * y + 9 * z) as f64).unwrap();
        let ds = reference_extract(&v, DescriptorKind::Top, PatternConfig::default()).unwrap();
        for d in ds {
            for (_, seg) in d.segments() {
                // one voxel, so a single bin holds all the mass
                assert_eq!(seg.iter().filter(|&&v| v == 1.0).count(), 1);
            }
        }
    }
}
