use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid image dimensions {width}x{height}")]
    InvalidDims { width: usize, height: usize },
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimsMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("value {value} outside [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },
    #[error("degenerate two-point sample: abscissas differ by {0:e}")]
    DegenerateSample(f64),
    #[error("non-positive slope {0} (focal length must be positive)")]
    NonPositiveSlope(f64),
    #[error("ransac failed on {axis} axis: best hypothesis has {best_inliers} of {samples} inliers (need {required})")]
    RansacFailed {
        axis: &'static str,
        best_inliers: usize,
        samples: usize,
        required: usize,
    },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("singular system: {0}")]
    Singular(&'static str),
    #[error("degenerate point configuration: {0}")]
    DegeneratePoints(&'static str),
    #[error("pixel ({u}, {v}) is outside the image or not valid in the mask")]
    InvalidPixel { u: usize, v: usize },
    #[error("format error: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
