use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the segmentation, skeleton and motility stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode image {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("cannot encode image {path}: {message}")]
    Encode { path: PathBuf, message: String },

    #[error("no decodable PNG or PGM frames found in {0}")]
    EmptySequence(PathBuf),

    #[error("dimension mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    DimensionMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    FeatureDimension { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not enough samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("pixel ({x}, {y}) lies outside the {width}x{height} image")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },

    #[error("mask is empty")]
    EmptyMask,

    #[error("every background cell is covered by the dilated worm mask")]
    AllCellsCovered,

    #[error("skeleton cannot start at ({x}, {y}): every neighbor has zero distance")]
    CannotStart { x: usize, y: usize },

    #[error("degenerate skeleton: {0}")]
    DegenerateSkeleton(String),

    #[error("too few frames for spectral analysis: need {needed}, got {got}")]
    TooFewFrames { needed: usize, got: usize },

    #[error("curvature field does not show a traveling wave (phase fit residual {residual:.3} rad)")]
    NonTravelingWave { residual: f64 },

    #[error("malformed {what} at line {line}: {message}")]
    Parse {
        what: &'static str,
        line: usize,
        message: String,
    },

    #[error("worm does not fit inside the frame: {0}")]
    SceneBounds(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(expected: (usize, usize), got: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            expected_w: expected.0,
            expected_h: expected.1,
            got_w: got.0,
            got_h: got.1,
        }
    }
}
