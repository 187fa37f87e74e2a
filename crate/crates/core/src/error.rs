use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid speed granularity K={0}: must be >= 1")]
    InvalidGranularity(i64),

    #[error("invalid per-axis speed count C={0}: must be odd and >= 3")]
    InvalidClassCount(i64),

    #[error("invalid frame count N={0}: must be >= 2")]
    InvalidFrameCount(usize),

    #[error("crop side {crop} does not fit a {width}x{height} source")]
    CropTooLarge { crop: u32, width: u32, height: u32 },

    #[error("no valid start position for displacement ({dx}, {dy}) in a {width}x{height} source with crop {crop}")]
    InfeasibleTrajectory {
        dx: f64,
        dy: f64,
        width: u32,
        height: u32,
        crop: u32,
    },

    #[error("crop at ({x}, {y}) with side {crop} leaves the {width}x{height} source")]
    OutOfBounds {
        x: i64,
        y: i64,
        crop: u32,
        width: u32,
        height: u32,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("cannot decode image {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("matching region {width}x{height} is smaller than the 8x8 minimum")]
    RegionTooSmall { width: u32, height: u32 },

    #[error("no sources found in {0}")]
    EmptySource(PathBuf),

    #[error("duplicate sample id {0}")]
    DuplicateSample(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("manifest schema error: {0}")]
    Schema(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("server rejected request (code {code}): {message}")]
    Remote { code: u8, message: String },

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGranularity(_) => "invalid-granularity",
            Error::InvalidClassCount(_) => "invalid-class-count",
            Error::InvalidFrameCount(_) => "invalid-frame-count",
            Error::CropTooLarge { .. } => "crop-too-large",
            Error::InfeasibleTrajectory { .. } => "infeasible-trajectory",
            Error::OutOfBounds { .. } => "out-of-bounds",
            Error::Config(_) => "config",
            Error::Decode { .. } => "decode",
            Error::RegionTooSmall { .. } => "region-too-small",
            Error::EmptySource(_) => "empty-source",
            Error::DuplicateSample(_) => "duplicate-sample",
            Error::Integrity(_) => "integrity",
            Error::Schema(_) => "schema",
            Error::Protocol(_) => "protocol",
            Error::Remote { .. } => "remote",
            Error::Image(_) => "image",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }
}
