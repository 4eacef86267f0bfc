//! LBP codes, per-frame plane histograms and normalized frame descriptors.
//!
//! The descriptor of frame `t` counts the codes of every spatially interior
//! pixel of frame `t`; temporal neighbours are read from frames `t ± rz`,
//! clamped to the first and last frame. Bit `n` of a code is set when the
//! interpolated neighbour `n` is greater than or equal to the centre; the
//! comparison is evaluated as `Σ wᵢ·(gᵢ − g_c) ≥ 0` so that weights summing
//! to one only up to rounding cannot clear bits on flat regions.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PatternConfig, PlaneId, SamplingPattern};
use crate::scalar::Scalar;
use crate::volume::GrayVolume;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DescriptorKind {
    /// Six intersection planes, SIP1..SIP6.
    SipL,
    /// Three orthogonal planes, XY, XZ, YZ.
    Top,
    Plane(PlaneId),
}

impl DescriptorKind {
    pub fn planes(&self) -> Vec<PlaneId> {
        match self {
            DescriptorKind::SipL => PlaneId::SIP.to_vec(),
            DescriptorKind::Top => PlaneId::TOP.to_vec(),
            DescriptorKind::Plane(p) => vec![*p],
        }
    }

    /// Human-readable method name used in reports.
    pub fn label(&self) -> String {
        match self {
            DescriptorKind::SipL => "LBP-SIPl".to_string(),
            DescriptorKind::Top => "LBP-TOP".to_string(),
            DescriptorKind::Plane(p) => format!("plane:{p}"),
        }
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DescriptorKind::SipL => f.write_str("lbp-sipl"),
            DescriptorKind::Top => f.write_str("lbp-top"),
            DescriptorKind::Plane(p) => write!(f, "plane:{p}"),
        }
    }
}

impl FromStr for DescriptorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "lbp-sipl" | "sipl" | "lbp-sip" => Ok(DescriptorKind::SipL),
            "lbp-top" | "top" => Ok(DescriptorKind::Top),
            _ => match lower.strip_prefix("plane:") {
                Some(id) => Ok(DescriptorKind::Plane(id.parse()?)),
                None => Err(Error::Config(format!(
                    "unknown descriptor kind `{s}` (expected lbp-sipl, lbp-top or plane:<id>)"
                ))),
            },
        }
    }
}

/// Code counts of one plane over one frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LbpHistogram {
    pub plane: PlaneId,
    pub bins: Vec<u32>,
}

impl LbpHistogram {
    pub fn total(&self) -> u64 {
        self.bins.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Per-plane normalized histograms of one frame, concatenated in plane order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameDescriptor<T> {
    /// 1-based frame index.
    pub frame_index: usize,
    pub planes: Vec<PlaneId>,
    pub bins_per_plane: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> FrameDescriptor<T> {
    pub fn segment(&self, plane: PlaneId) -> Option<&[T]> {
        let k = self.planes.iter().position(|&p| p == plane)?;
        Some(&self.values[k * self.bins_per_plane..(k + 1) * self.bins_per_plane])
    }

    pub fn segments(&self) -> impl Iterator<Item = (PlaneId, &[T])> + '_ {
        self.planes
            .iter()
            .copied()
            .zip(self.values.chunks(self.bins_per_plane))
    }
}

/// Zero-based voxel coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Voxel {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

/// Fails when the volume cannot host a single interior pixel for `config`.
pub fn check_volume<T: Scalar>(volume: &GrayVolume<T>, config: &PatternConfig) -> Result<()> {
    let r = config.radii();
    if volume.width() < 2 * r.x as usize + 1 || volume.height() < 2 * r.y as usize + 1 {
        return Err(Error::VolumeTooSmall {
            width: volume.width(),
            height: volume.height(),
            depth: volume.depth(),
            rx: r.x,
            ry: r.y,
            rz: r.z,
        });
    }
    Ok(())
}

/// Code of a single voxel.
///
/// # Panics
///
/// When `center` lies closer than the pattern radius to the x/y border or
/// outside the volume.
pub fn lbp_code<T: Scalar>(
    volume: &GrayVolume<T>,
    center: Voxel,
    pattern: &SamplingPattern<T>,
) -> u32 {
    let r = pattern.config.radii();
    let (rx, ry) = (r.x as usize, r.y as usize);
    assert!(
        center.x >= rx
            && center.x + rx < volume.width()
            && center.y >= ry
            && center.y + ry < volume.height()
            && center.z < volume.depth(),
        "voxel {center:?} is not interior for radii ({rx}, {ry})"
    );
    let c = volume.get(center.x, center.y, center.z);
    let last = volume.depth() as isize - 1;
    let mut code = 0u32;
    for (bit, taps) in pattern.taps.iter().enumerate() {
        let mut acc = T::zero();
        for tap in taps {
            let x = (center.x as isize + tap.dx as isize) as usize;
            let y = (center.y as isize + tap.dy as isize) as usize;
            let z = (center.z as isize + tap.dz as isize).clamp(0, last) as usize;
            acc += tap.weight * (volume.get(x, y, z) - c);
        }
        code |= u32::from(acc >= T::zero()) << bit;
    }
    code
}

/// Taps of one pattern resolved to flat index offsets for a given frame, so
/// the inner loop is a gather over the volume buffer.
struct FrameKernel<T> {
    rel: Vec<isize>,
    weights: Vec<T>,
    starts: Vec<usize>,
}

impl<T: Scalar> FrameKernel<T> {
    fn new(pattern: &SamplingPattern<T>, volume: &GrayVolume<T>, z: usize) -> Self {
        let w = volume.width() as isize;
        let plane = volume.frame_len() as isize;
        let last = volume.depth() as isize - 1;
        let z = z as isize;
        let mut rel = Vec::new();
        let mut weights = Vec::new();
        let mut starts = Vec::with_capacity(pattern.n_points() + 1);
        starts.push(0);
        for taps in &pattern.taps {
            for tap in taps {
                let tz = (z + tap.dz as isize).clamp(0, last);
                rel.push((tz - z) * plane + tap.dy as isize * w + tap.dx as isize);
                weights.push(tap.weight);
            }
            starts.push(rel.len());
        }
        Self {
            rel,
            weights,
            starts,
        }
    }
}

fn plane_histogram<T: Scalar>(
    volume: &GrayVolume<T>,
    pattern: &SamplingPattern<T>,
    z: usize,
) -> LbpHistogram {
    let kernel = FrameKernel::new(pattern, volume, z);
    let r = pattern.config.radii();
    let (rx, ry) = (r.x as usize, r.y as usize);
    let (w, h) = (volume.width(), volume.height());
    let data = volume.data();
    let n_points = pattern.n_points();
    let mut bins = vec![0u32; pattern.config.bins()];
    let frame_base = z * volume.frame_len();
    let zero = T::zero();
    for y in ry..h - ry {
        let row = frame_base + y * w;
        for x in rx..w - rx {
            let c = row + x;
            let centre = data[c];
            let mut code = 0usize;
            for bit in 0..n_points {
                let span = kernel.starts[bit]..kernel.starts[bit + 1];
                let mut acc = T::zero();
                for (&off, &weight) in kernel.rel[span.clone()].iter().zip(&kernel.weights[span]) {
                    acc += weight * (data[(c as isize + off) as usize] - centre);
                }
                code |= usize::from(acc >= zero) << bit;
            }
            bins[code] += 1;
        }
    }
    LbpHistogram {
        plane: pattern.plane,
        bins,
    }
}

/// Extraction with the sampling patterns of a plane set computed once.
#[derive(Clone, Debug)]
pub struct Extractor<T> {
    config: PatternConfig,
    patterns: Vec<SamplingPattern<T>>,
}

impl<T: Scalar> Extractor<T> {
    pub fn new(planes: &[PlaneId], config: PatternConfig) -> Self {
        let patterns = planes
            .iter()
            .map(|&p| SamplingPattern::new(p, config))
            .collect();
        Self { config, patterns }
    }

    pub fn for_kind(kind: DescriptorKind, config: PatternConfig) -> Self {
        Self::new(&kind.planes(), config)
    }

    pub fn config(&self) -> PatternConfig {
        self.config
    }

    pub fn patterns(&self) -> &[SamplingPattern<T>] {
        &self.patterns
    }

    /// Raw histograms of 1-based `frame`, one per plane.
    pub fn frame_histograms(
        &self,
        volume: &GrayVolume<T>,
        frame: usize,
    ) -> Result<Vec<LbpHistogram>> {
        check_volume(volume, &self.config)?;
        if frame == 0 || frame > volume.depth() {
            return Err(Error::Invalid(format!(
                "frame {frame} outside 1..={}",
                volume.depth()
            )));
        }
        Ok(self
            .patterns
            .par_iter()
            .map(|p| plane_histogram(volume, p, frame - 1))
            .collect())
    }

    pub fn frame_descriptor(
        &self,
        volume: &GrayVolume<T>,
        frame: usize,
    ) -> Result<FrameDescriptor<T>> {
        normalize(frame, &self.frame_histograms(volume, frame)?)
    }

    /// Descriptors of every frame, in frame order.
    pub fn extract(&self, volume: &GrayVolume<T>) -> Result<Vec<FrameDescriptor<T>>> {
        check_volume(volume, &self.config)?;
        (1..=volume.depth())
            .into_par_iter()
            .map(|t| self.frame_descriptor(volume, t))
            .collect()
    }
}

pub fn frame_histograms<T: Scalar>(
    volume: &GrayVolume<T>,
    frame: usize,
    planes: &[PlaneId],
    config: PatternConfig,
) -> Result<Vec<LbpHistogram>> {
    Extractor::new(planes, config).frame_histograms(volume, frame)
}

/// Divides each plane histogram by its own total and concatenates them.
pub fn normalize<T: Scalar>(
    frame_index: usize,
    histograms: &[LbpHistogram],
) -> Result<FrameDescriptor<T>> {
    let bins_per_plane = histograms.first().map_or(0, |h| h.bins.len());
    let mut values = Vec::with_capacity(bins_per_plane * histograms.len());
    for h in histograms {
        if h.bins.len() != bins_per_plane {
            return Err(Error::Invalid(format!(
                "plane {} has {} bins, expected {bins_per_plane}",
                h.plane,
                h.bins.len()
            )));
        }
        let total = h.total();
        if total == 0 {
            return Err(Error::EmptyHistogram(h.plane));
        }
        let total = total as f64;
        values.extend(h.bins.iter().map(|&c| T::of(f64::from(c) / total)));
    }
    Ok(FrameDescriptor {
        frame_index,
        planes: histograms.iter().map(|h| h.plane).collect(),
        bins_per_plane,
        values,
    })
}

pub fn extract_descriptors<T: Scalar>(
    volume: &GrayVolume<T>,
    kind: DescriptorKind,
    config: PatternConfig,
) -> Result<Vec<FrameDescriptor<T>>> {
    Extractor::for_kind(kind, config).extract(volume)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Radii;

    fn vol(
        w: usize,
        h: usize,
        d: usize,
        f: impl FnMut(usize, usize, usize) -> f64,
    ) -> GrayVolume<f64> {
        GrayVolume::from_fn(w, h, d, f).unwrap()
    }

    #[test]
    fn constant_volume_sets_every_bit() {
        let v = GrayVolume::constant(5, 5, 3, 42.0f64).unwrap();
        for n in [4, 8, 16] {
            let cfg = PatternConfig::with_points(n).unwrap();
            for plane in PlaneId::ALL {
                let p = SamplingPattern::new(plane, cfg);
                for z in 0..3 {
                    assert_eq!(lbp_code(&v, Voxel { x: 2, y: 2, z }, &p), (1 << n) - 1);
                }
            }
        }
    }

    #[test]
    fn hand_evaluated_xy_code() {
        // θ = 0, 90°, 180°, 270° hit (x+1, y), (x, y−1), (x−1, y), (x, y+1)
        let v = vol(3, 3, 1, |x, y, _| match (x, y) {
            (1, 1) => 5.0,
            (2, 1) => 6.0,
            (1, 0) => 4.0,
            (0, 1) => 5.0,
            (1, 2) => 2.0,
            _ => 0.0,
        });
        let p = SamplingPattern::new(PlaneId::TopXy, PatternConfig::with_points(4).unwrap());
        assert_eq!(lbp_code(&v, Voxel { x: 1, y: 1, z: 0 }, &p), 0b0101);
    }

    #[test]
    fn strict_shortfall_clears_every_bit() {
        let v = vol(
            3,
            3,
            3,
            |x, y, z| if (x, y, z) == (1, 1, 1) { 10.0 } else { 9.999 },
        );
        for plane in PlaneId::ALL {
            let p = SamplingPattern::new(plane, PatternConfig::default());
            assert_eq!(lbp_code(&v, Voxel { x: 1, y: 1, z: 1 }, &p), 0, "{plane}");
        }
    }

    #[test]
    #[should_panic(expected = "not interior")]
    fn border_voxel_is_contract_error() {
        let v = GrayVolume::constant(5, 5, 1, 0.0f64).unwrap();
        let p = SamplingPattern::new(PlaneId::TopXy, PatternConfig::default());
        lbp_code(&v, Voxel { x: 0, y: 2, z: 0 }, &p);
    }

    #[test]
    fn constant_histogram_counts_interior() {
        let v = GrayVolume::constant(8, 8, 3, 1.0f64).unwrap();
        let hs = frame_histograms(&v, 2, &[PlaneId::Sip1], PatternConfig::default()).unwrap();
        assert_eq!(hs[0].bins[255], 36);
        assert_eq!(hs[0].total(), 36);
    }

    #[test]
    fn totals_ignore_content() {
        let v = vol(8, 8, 3, |x, y, z| ((x * 31 + y * 17 + z * 7) % 23) as f64);
        for t in 1..=3 {
            for h in frame_histograms(&v, t, &PlaneId::ALL, PatternConfig::default()).unwrap() {
                assert_eq!(h.total(), 36);
            }
        }
    }

    #[test]
    fn too_small_volume() {
        let v = GrayVolume::constant(4, 8, 3, 0.0f64).unwrap();
        let cfg = PatternConfig::new(8, Radii { x: 2, y: 1, z: 1 }).unwrap();
        assert!(matches!(
            extract_descriptors(&v, DescriptorKind::SipL, cfg),
            Err(Error::VolumeTooSmall { .. })
        ));
        let cfg = PatternConfig::new(8, Radii { x: 1, y: 1, z: 3 }).unwrap();
        // temporal reach beyond depth is clamped, not an error
        assert!(extract_descriptors(&v, DescriptorKind::SipL, cfg).is_ok());
    }

    #[test]
    fn normalize_ratios() {
        let h = LbpHistogram {
            plane: PlaneId::Sip1,
            bins: vec![2, 2, 0, 0],
        };
        let d: FrameDescriptor<f64> = normalize(1, &[h]).unwrap();
        assert_eq!(d.values, vec![0.5, 0.5, 0.0, 0.0]);

        let one_hot = LbpHistogram {
            plane: PlaneId::Sip2,
            bins: vec![0, 0, 7, 0],
        };
        let d: FrameDescriptor<f64> = normalize(1, &[one_hot]).unwrap();
        assert_eq!(d.values, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn normalize_per_plane() {
        let mk = |plane, hot: usize| {
            let mut bins = vec![0u32; 256];
            bins[hot] = 20;
            bins[(hot + 1) % 256] = 16;
            LbpHistogram { plane, bins }
        };
        let d: FrameDescriptor<f64> =
            normalize(3, &[mk(PlaneId::TopXy, 0), mk(PlaneId::TopXz, 9)]).unwrap();
        assert_eq!(d.values.len(), 512);
        for (_, seg) in d.segments() {
            assert!((seg.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(d.segment(PlaneId::TopXz).unwrap()[9], 20.0 / 36.0);
        assert!(d.segment(PlaneId::Sip1).is_none());
    }

    #[test]
    fn empty_histogram_rejected() {
        let h = LbpHistogram {
            plane: PlaneId::Sip4,
            bins: vec![0; 16],
        };
        assert!(matches!(
            normalize::<f64>(1, &[h]),
            Err(Error::EmptyHistogram(PlaneId::Sip4))
        ));
    }

    #[test]
    fn descriptor_lengths() {
        let v = vol(6, 6, 4, |x, y, z| (x ^ y ^ z) as f64);
        let cfg = PatternConfig::default();
        let sip = extract_descriptors(&v, DescriptorKind::SipL, cfg).unwrap();
        let top = extract_descriptors(&v, DescriptorKind::Top, cfg).unwrap();
        let one = extract_descriptors(&v, DescriptorKind::Plane(PlaneId::Sip5), cfg).unwrap();
        assert_eq!(sip.len(), 4);
        assert!(sip.iter().all(|d| d.values.len() == 1536));
        assert!(top.iter().all(|d| d.values.len() == 768));
        assert!(one.iter().all(|d| d.values.len() == 256));
        assert_eq!(
            sip.iter().map(|d| d.frame_index).collect::<Vec<_>>(),
            [1, 2, 3, 4]
        );
    }

    #[test]
    fn constant_volume_frames_identical() {
        let v = GrayVolume::constant(7, 6, 5, 3.5f32).unwrap();
        let ds = extract_descriptors(&v, DescriptorKind::SipL, PatternConfig::default()).unwrap();
        for d in &ds {
            assert_eq!(d.values, ds[0].values);
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!(
            "lbp-sipl".parse::<DescriptorKind>().unwrap(),
            DescriptorKind::SipL
        );
        assert_eq!(
            "LBP-TOP".parse::<DescriptorKind>().unwrap(),
            DescriptorKind::Top
        );
        assert_eq!(
            "plane:sip2".parse::<DescriptorKind>().unwrap(),
            DescriptorKind::Plane(PlaneId::Sip2)
        );
        assert!("plane:".parse::<DescriptorKind>().is_err());
        assert!("hog".parse::<DescriptorKind>().is_err());
        for k in [
            DescriptorKind::SipL,
            DescriptorKind::Top,
            DescriptorKind::Plane(PlaneId::TopYz),
        ] {
            assert_eq!(k.to_string().parse::<DescriptorKind>().unwrap(), k);
        }
    }
}
