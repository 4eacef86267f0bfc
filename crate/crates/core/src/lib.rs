//! Spatiotemporal local binary patterns over the nine sampling planes of a
//! gray-level video volume, and apex-frame spotting for micro-expression
//! sequences.
//!
//! The pipeline is:
//!
//! 1. [`volume`]: decode a frame sequence into a [`GrayVolume`].
//! 2. [`geometry`]: circular neighbourhoods on the orthogonal (`TOP_*`) and
//!    intersection (`SIP1`..`SIP6`) planes, with trilinear interpolation taps.
//! 3. [`lbp`]: per-frame, per-plane code histograms, normalized and
//!    concatenated into a [`FrameDescriptor`]. [`reference`] holds a literal
//!    nested-loop implementation of the same contract.
//! 4. [`spotting`]: squared distance of every frame's descriptor to frame 1;
//!    the earliest maximum is the apex.
//! 5. [`eval`]: MAE, standard error and exact-hit rate over a corpus.
//!
//! [`synth`] generates sequences with a planted apex and [`bench`] measures
//! throughput.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*F64` and
//! `*F32` aliases name the common instantiations.

pub mod bench;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod lbp;
pub mod reference;
pub mod scalar;
pub mod spotting;
pub mod synth;
pub mod volume;

pub use error::{Error, Result};
pub use eval::{build_report, exact_hit_rate, mae, se, EvalReport, SampleOutcome};
pub use geometry::{
    interpolation_taps, plane_offsets, PatternConfig, PlaneId, Radii, SampleOffset,
    SamplingPattern, Tap,
};
pub use lbp::{
    extract_descriptors, frame_histograms, lbp_code, normalize, DescriptorKind, Extractor,
    FrameDescriptor, LbpHistogram, Voxel,
};
pub use reference::reference_extract;
pub use scalar::Scalar;
pub use spotting::{fd_curve, per_plane_spots, spot_apex, FdCurve, PlaneSpots, Scope, SpotResult};
pub use synth::{generate_sequence, Envelope, SynthSpec};
pub use volume::{
    load_corpus, load_sequence, validate_annotation, Annotation, GrayVolume, SequenceManifest,
};

pub type GrayVolumeF64 = GrayVolume<f64>;
pub type GrayVolumeF32 = GrayVolume<f32>;
pub type FrameDescriptorF64 = FrameDescriptor<f64>;
pub type FrameDescriptorF32 = FrameDescriptor<f32>;
pub type SamplingPatternF64 = SamplingPattern<f64>;
pub type FdCurveF64 = FdCurve<f64>;
pub type SpotResultF64 = SpotResult<f64>;

/// Loads a sequence, extracts descriptors and spots the apex on every scope
/// of `kind`.
pub fn spot_sequence<T: Scalar>(
    volume: &GrayVolume<T>,
    kind: DescriptorKind,
    config: PatternConfig,
) -> Result<PlaneSpots<T>> {
    let descriptors = extract_descriptors(volume, kind, config)?;
    per_plane_spots(&descriptors)
}
