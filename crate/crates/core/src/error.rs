use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::PlaneId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to decode image {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("failed to encode image {path}: {message}")]
    Encode { path: PathBuf, message: String },

    #[error("frame {path} is {found_width}x{found_height}, expected {width}x{height}")]
    DimensionMismatch {
        path: PathBuf,
        width: u32,
        height: u32,
        found_width: u32,
        found_height: u32,
    },

    #[error("malformed manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("invalid pattern configuration: {0}")]
    Config(String),

    #[error("volume {width}x{height}x{depth} is too small for radii ({rx}, {ry}, {rz})")]
    VolumeTooSmall {
        width: usize,
        height: usize,
        depth: usize,
        rx: u32,
        ry: u32,
        rz: u32,
    },

    #[error("empty plane histogram for {0}")]
    EmptyHistogram(PlaneId),

    #[error("descriptor length mismatch: frame {frame} has {found} values, expected {expected}")]
    DescriptorLength {
        frame: usize,
        expected: usize,
        found: usize,
    },

    #[error("plane {0} is not part of the descriptor")]
    PlaneNotInDescriptor(PlaneId),

    #[error("invalid input: {0}")]
    Invalid(String),
}
