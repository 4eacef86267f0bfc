//! Image sequences as gray-level volumes, plus manifest and annotation files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// BT.601 luma weights applied to 8-bit RGB frames.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

const IMAGE_EXTENSIONS: [&str; 2] = ["pgm", "png"];

/// A `width × height × depth` gray-level volume stored frame-major, then
/// row-major. Intensities are real valued in `[0, 255]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayVolume<T> {
    width: usize,
    height: usize,
    depth: usize,
    data: Vec<T>,
}

impl<T: Scalar> GrayVolume<T> {
    pub fn from_vec(width: usize, height: usize, depth: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 || depth == 0 {
            return Err(Error::Invalid(format!(
                "volume dimensions must be positive, got {width}x{height}x{depth}"
            )));
        }
        if data.len() != width * height * depth {
            return Err(Error::Invalid(format!(
                "volume {width}x{height}x{depth} needs {} samples, got {}",
                width * height * depth,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            depth,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        depth: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * depth);
        for z in 0..depth {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(x, y, z));
                }
            }
        }
        Self::from_vec(width, height, depth, data)
    }

    pub fn constant(width: usize, height: usize, depth: usize, value: T) -> Result<Self> {
        Self::from_vec(width, height, depth, vec![value; width * height * depth])
    }

    /// Stacks equally sized frames, each `width * height` samples long.
    pub fn from_frames(width: usize, height: usize, frames: Vec<Vec<T>>) -> Result<Self> {
        let depth = frames.len();
        let mut data = Vec::with_capacity(width * height * depth);
        for (i, frame) in frames.into_iter().enumerate() {
            if frame.len() != width * height {
                return Err(Error::Invalid(format!(
                    "frame {} has {} samples, expected {}",
                    i + 1,
                    frame.len(),
                    width * height
                )));
            }
            data.extend(frame);
        }
        Self::from_vec(width, height, depth, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn frame_len(&self) -> usize {
        self.width * self.height
    }

    /// Zero-based voxel access.
    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> T {
        self.data[(z * self.height + y) * self.width + x]
    }

    /// Zero-based frame slice.
    pub fn frame(&self, z: usize) -> &[T] {
        let n = self.frame_len();
        &self.data[z * n..(z + 1) * n]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            width: self.width,
            height: self.height,
            depth: self.depth,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Same frames in reverse temporal order.
    pub fn reversed(&self) -> Self {
        let n = self.frame_len();
        let mut data = Vec::with_capacity(self.data.len());
        for z in (0..self.depth).rev() {
            data.extend_from_slice(&self.data[z * n..(z + 1) * n]);
        }
        Self { data, ..*self }
    }
}

/// Onset, apex and offset frames, all 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub onset: usize,
    pub apex: usize,
    pub offset: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnnotationViolation {
    OnsetBeforeFirstFrame,
    ApexBeforeOnset,
    OffsetBeforeApex,
    OffsetExceedsDepth,
}

impl fmt::Display for AnnotationViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnnotationViolation::OnsetBeforeFirstFrame => "onset before first frame",
            AnnotationViolation::ApexBeforeOnset => "apex before onset",
            AnnotationViolation::OffsetBeforeApex => "offset before apex",
            AnnotationViolation::OffsetExceedsDepth => "offset exceeds depth",
        })
    }
}

/// Checks `1 ≤ onset ≤ apex ≤ offset ≤ depth`, reporting the first violation.
pub fn validate_annotation(
    annotation: &Annotation,
    depth: usize,
) -> std::result::Result<(), AnnotationViolation> {
    if annotation.onset < 1 {
        Err(AnnotationViolation::OnsetBeforeFirstFrame)
    } else if annotation.apex < annotation.onset {
        Err(AnnotationViolation::ApexBeforeOnset)
    } else if annotation.offset < annotation.apex {
        Err(AnnotationViolation::OffsetBeforeApex)
    } else if annotation.offset > depth {
        Err(AnnotationViolation::OffsetExceedsDepth)
    } else {
        Ok(())
    }
}

/// On-disk manifest layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestFile {
    pub sequence_id: String,
    pub frames: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onset: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apex: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceManifest {
    pub sequence_id: String,
    pub frame_paths: Vec<PathBuf>,
    pub ground_truth: Option<Annotation>,
}

impl SequenceManifest {
    /// Frames of a directory, ordered lexicographically by file name.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let entries = fs::read_dir(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut frame_paths = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|source| Error::Io {
                path: dir.to_path_buf(),
                source,
            })?;
            let path = entry.path();
            let is_image = path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
            if is_image && path.is_file() {
                frame_paths.push(path);
            }
        }
        frame_paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
        if frame_paths.is_empty() {
            return Err(Error::Manifest {
                path: dir.to_path_buf(),
                message: "directory contains no PGM or PNG frames".into(),
            });
        }
        let sequence_id = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        Ok(Self {
            sequence_id,
            frame_paths,
            ground_truth: None,
        })
    }

    /// Resolves relative frame paths against `base`.
    pub fn from_file_entry(file: ManifestFile, base: &Path, origin: &Path) -> Result<Self> {
        if file.frames.is_empty() {
            return Err(Error::Manifest {
                path: origin.to_path_buf(),
                message: format!("sequence `{}` lists no frames", file.sequence_id),
            });
        }
        let ground_truth = match (file.onset, file.apex, file.offset) {
            (None, None, None) => None,
            (Some(onset), Some(apex), Some(offset)) => Some(Annotation {
                onset,
                apex,
                offset,
            }),
            (None, Some(apex), None) => Some(Annotation {
                onset: 1,
                apex,
                offset: file.frames.len(),
            }),
            _ => {
                return Err(Error::Manifest {
                    path: origin.to_path_buf(),
                    message: format!(
                        "sequence `{}` must give onset, apex and offset together",
                        file.sequence_id
                    ),
                })
            }
        };
        let frame_paths = file
            .frames
            .into_iter()
            .map(|p| if p.is_relative() { base.join(p) } else { p })
            .collect();
        Ok(Self {
            sequence_id: file.sequence_id,
            frame_paths,
            ground_truth,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: ManifestFile = read_json(path)?;
        Self::from_file_entry(file, parent_dir(path), path)
    }

    /// A directory of frames or a manifest JSON file.
    pub fn open(path: &Path) -> Result<Self> {
        if path.is_dir() {
            Self::from_dir(path)
        } else {
            Self::load(path)
        }
    }

    pub fn to_file(&self) -> ManifestFile {
        ManifestFile {
            sequence_id: self.sequence_id.clone(),
            frames: self.frame_paths.clone(),
            onset: self.ground_truth.map(|a| a.onset),
            apex: self.ground_truth.map(|a| a.apex),
            offset: self.ground_truth.map(|a| a.offset),
        }
    }
}

/// Reads a JSON array of manifests.
pub fn load_corpus(path: &Path) -> Result<Vec<SequenceManifest>> {
    let files: Vec<ManifestFile> = read_json(path)?;
    let base = parent_dir(path);
    files
        .into_iter()
        .map(|f| SequenceManifest::from_file_entry(f, base, path))
        .collect()
}

fn parent_dir(path: &Path) -> &Path {
    path.parent().unwrap_or_else(|| Path::new("."))
}

fn read_json<D: serde::de::DeserializeOwned>(path: &Path) -> Result<D> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

struct DecodedFrame<T> {
    width: u32,
    height: u32,
    samples: Vec<T>,
}

fn decode_frame<T: Scalar>(path: &Path) -> Result<DecodedFrame<T>> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let format = image::guess_format(&bytes)
        .or_else(|_| ImageFormat::from_path(path))
        .map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    let img = image::load_from_memory_with_format(&bytes, format).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let (width, height) = (img.width(), img.height());
    let samples = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(gray).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| gray(p.0[0])).collect(),
        DynamicImage::ImageRgb8(buf) => buf.pixels().map(|p| luma(p.0)).collect(),
        DynamicImage::ImageRgba8(buf) => buf
            .pixels()
            .map(|p| luma([p.0[0], p.0[1], p.0[2]]))
            .collect(),
        other => {
            return Err(Error::Decode {
                path: path.to_path_buf(),
                message: format!("unsupported pixel layout {:?}", other.color()),
            })
        }
    };
    Ok(DecodedFrame {
        width,
        height,
        samples,
    })
}

#[inline]
fn gray<T: Scalar>(v: u8) -> T {
    T::of(f64::from(v))
}

/// BT.601 luma, unrounded.
#[inline]
pub fn luma<T: Scalar>(rgb: [u8; 3]) -> T {
    let [r, g, b] = rgb.map(f64::from);
    T::of(LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b)
}

/// Decodes every frame (in parallel) and stacks them in manifest order.
pub fn load_sequence<T: Scalar>(manifest: &SequenceManifest) -> Result<GrayVolume<T>> {
    if manifest.frame_paths.is_empty() {
        return Err(Error::Invalid(format!(
            "sequence `{}` has no frames",
            manifest.sequence_id
        )));
    }
    let frames: Vec<DecodedFrame<T>> = manifest
        .frame_paths
        .par_iter()
        .map(|p| decode_frame(p))
        .collect::<Result<_>>()?;
    let (width, height) = (frames[0].width, frames[0].height);
    for (frame, path) in frames.iter().zip(&manifest.frame_paths) {
        if frame.width != width || frame.height != height {
            return Err(Error::DimensionMismatch {
                path: path.clone(),
                width,
                height,
                found_width: frame.width,
                found_height: frame.height,
            });
        }
    }
    GrayVolume::from_frames(
        width as usize,
        height as usize,
        frames.into_iter().map(|f| f.samples).collect(),
    )
}

/// Writes frame `z` (0-based) as an 8-bit binary PGM, rounding and clipping
/// intensities to `[0, 255]`.
pub fn write_pgm<T: Scalar>(volume: &GrayVolume<T>, z: usize, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = volume
        .frame(z)
        .iter()
        .map(|v| v.as_f64().round().clamp(0.0, 255.0) as u8)
        .collect();
    let file = fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let encoder = PnmEncoder::new(std::io::BufWriter::new(file))
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary));
    encoder
        .write_image(
            &bytes,
            volume.width() as u32,
            volume.height() as u32,
            ExtendedColorType::L8,
        )
        .map_err(|e| Error::Encode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{GrayImage, Luma, Rgb, RgbImage};

    fn write_gray(dir: &Path, name: &str, w: u32, h: u32, v: u8) -> PathBuf {
        let p = dir.join(name);
        GrayImage::from_pixel(w, h, Luma([v])).save(&p).unwrap();
        p
    }

    #[test]
    fn identical_gray_frames() {
        let dir = tempfile::tempdir().unwrap();
        let frames: Vec<_> = (0..5)
            .map(|i| write_gray(dir.path(), &format!("f{i}.png"), 8, 8, 77))
            .collect();
        let manifest = SequenceManifest {
            sequence_id: "s".into(),
            frame_paths: frames,
            ground_truth: None,
        };
        let vol: GrayVolume<f64> = load_sequence(&manifest).unwrap();
        assert_eq!((vol.width(), vol.height(), vol.depth()), (8, 8, 5));
        assert!(vol.data().iter().all(|&v| v == 77.0));
    }

    #[test]
    fn pure_red_luma() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("red.png");
        RgbImage::from_pixel(4, 3, Rgb([255, 0, 0]))
            .save(&p)
            .unwrap();
        let manifest = SequenceManifest {
            sequence_id: "red".into(),
            frame_paths: vec![p],
            ground_truth: None,
        };
        let vol: GrayVolume<f64> = load_sequence(&manifest).unwrap();
        for &v in vol.data() {
            assert!((v - 76.245).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn gray_rgb_is_identity() {
        for v in [0u8, 1, 100, 254, 255] {
            let l: f64 = luma([v, v, v]);
            assert!((l - f64::from(v)).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_names_frame() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_gray(dir.path(), "a.png", 10, 10, 0);
        let b = write_gray(dir.path(), "b.png", 12, 12, 0);
        let manifest = SequenceManifest {
            sequence_id: "m".into(),
            frame_paths: vec![a, b.clone()],
            ground_truth: None,
        };
        match load_sequence::<f64>(&manifest) {
            Err(Error::DimensionMismatch { path, .. }) => assert_eq!(path, b),
            other => panic!("expected mismatch, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_names_path() {
        let manifest = SequenceManifest {
            sequence_id: "m".into(),
            frame_paths: vec![PathBuf::from("/nonexistent/frame.png")],
            ground_truth: None,
        };
        let err = load_sequence::<f64>(&manifest).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/frame.png"));
    }

    #[test]
    fn corrupt_file_is_decode_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.png");
        fs::write(&p, b"not an image").unwrap();
        let manifest = SequenceManifest {
            sequence_id: "m".into(),
            frame_paths: vec![p],
            ground_truth: None,
        };
        assert!(matches!(
            load_sequence::<f64>(&manifest),
            Err(Error::Decode { .. })
        ));
    }

    #[test]
    fn directory_order_is_lexicographic() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["b.pgm", "a.png", "c.PNG", "notes.txt"] {
            if name.ends_with(".txt") {
                fs::write(dir.path().join(name), "x").unwrap();
            } else {
                write_gray(dir.path(), name, 3, 3, 1);
            }
        }
        let m = SequenceManifest::from_dir(dir.path()).unwrap();
        let names: Vec<_> = m
            .frame_paths
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, ["a.png", "b.pgm", "c.PNG"]);
    }

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let vol =
            GrayVolume::<f64>::from_fn(5, 4, 2, |x, y, z| (x * 10 + y + z * 50) as f64).unwrap();
        let paths: Vec<_> = (0..2)
            .map(|z| {
                let p = dir.path().join(format!("{z}.pgm"));
                write_pgm(&vol, z, &p).unwrap();
                p
            })
            .collect();
        let manifest = SequenceManifest {
            sequence_id: "rt".into(),
            frame_paths: paths,
            ground_truth: None,
        };
        assert_eq!(load_sequence::<f64>(&manifest).unwrap(), vol);
    }

    #[test]
    fn manifest_relative_paths_and_annotation() {
        let dir = tempfile::tempdir().unwrap();
        write_gray(dir.path(), "0.png", 3, 3, 5);
        let mpath = dir.path().join("m.json");
        fs::write(
            &mpath,
            r#"{"sequence_id":"x","frames":["0.png"],"onset":1,"apex":1,"offset":1}"#,
        )
        .unwrap();
        let m = SequenceManifest::load(&mpath).unwrap();
        assert_eq!(m.frame_paths, vec![dir.path().join("0.png")]);
        assert_eq!(
            m.ground_truth,
            Some(Annotation {
                onset: 1,
                apex: 1,
                offset: 1
            })
        );
        assert_eq!(load_sequence::<f32>(&m).unwrap().depth(), 1);
    }

    #[test]
    fn partial_annotation_rejected() {
        let file = ManifestFile {
            sequence_id: "x".into(),
            frames: vec!["a.png".into()],
            onset: Some(1),
            apex: None,
            offset: None,
        };
        assert!(SequenceManifest::from_file_entry(file, Path::new("."), Path::new("m")).is_err());
    }

    #[test]
    fn annotation_checks() {
        let a = Annotation {
            onset: 1,
            apex: 12,
            offset: 20,
        };
        assert_eq!(validate_annotation(&a, 30), Ok(()));
        let err = validate_annotation(&a, 15).unwrap_err();
        assert_eq!(err.to_string(), "offset exceeds depth");
        let b = Annotation {
            onset: 5,
            apex: 3,
            offset: 9,
        };
        assert_eq!(
            validate_annotation(&b, 30).unwrap_err().to_string(),
            "apex before onset"
        );
        let c = Annotation {
            onset: 0,
            apex: 3,
            offset: 9,
        };
        assert_eq!(
            validate_annotation(&c, 30),
            Err(AnnotationViolation::OnsetBeforeFirstFrame)
        );
    }

    #[test]
    fn reversed_volume() {
        let vol = GrayVolume::<f64>::from_fn(2, 2, 3, |_, _, z| z as f64).unwrap();
        let r = vol.reversed();
        assert_eq!(r.get(0, 0, 0), 2.0);
        assert_eq!(r.get(1, 1, 2), 0.0);
        assert_eq!(r.reversed(), vol);
    }
}
