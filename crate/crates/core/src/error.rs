use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions {width}x{height}x{channels}: {reason}")]
    InvalidDimensions {
        width: usize,
        height: usize,
        channels: usize,
        reason: &'static str,
    },

    #[error("sample {index} is {value}, samples must be finite and non-negative")]
    InvalidSample { index: usize, value: f64 },

    #[error("payload has {actual} samples, expected {expected}")]
    SampleCount { expected: usize, actual: usize },

    #[error("malformed header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("payload of {path} is {actual} bytes, header declares {expected}")]
    PayloadSize {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },

    #[error("unrecognised image format for {0} (expected .pgm/.ppm/.pnm or .bin/.json)")]
    UnknownFormat(PathBuf),

    #[error("sample {index} = {value} cannot be stored exactly as {dtype}")]
    NotRepresentable {
        index: usize,
        value: f64,
        dtype: &'static str,
    },

    #[error("scale s={s} out of range 1..={max}")]
    ScaleOutOfRange { s: usize, max: usize },

    #[error("dynamics divisor k={k} out of range 1..={max}")]
    DivisorOutOfRange { k: u64, max: u64 },

    #[error("color keys have mismatched channel counts {0:?}")]
    ChannelMismatch([usize; 4]),

    #[error("crop {x},{y} {w}x{h} does not fit a {width}x{height} image")]
    CropOutOfBounds {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },

    #[error("fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("fit abscissa is degenerate (all scales equal)")]
    DegenerateAbscissa,

    #[error("image is {width}x{height}; a square image is required")]
    NotSquare { width: usize, height: usize },

    #[error("image side {side} is below the minimum {min}")]
    TooSmall { side: usize, min: usize },

    #[error("scale s={0} is not present in the entropy surface")]
    ScaleAbsent(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid generator parameter: {0}")]
    Generator(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
