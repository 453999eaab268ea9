use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid header: {source}")]
    Header {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: invalid csv: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{0}")]
    Format(String),

    #[error("frames < 2 (got {0}); a temporal stack needs at least two frames")]
    TooFewFrames(usize),

    #[error("payload size mismatch: header declares {expected} bytes, found {found}")]
    SizeMismatch { expected: u64, found: u64 },

    #[error("non-finite value at sample index {0}")]
    NonFinite(usize),

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("signal length mismatch: expected {expected} frames, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("no labeled segments")]
    NoSegments,

    #[error("artery seed mask is empty")]
    EmptySeedMask,

    #[error("signal is constant and cannot be normalized")]
    ConstantSignal,

    #[error("image is constant and cannot be z-scored")]
    ConstantImage,

    #[error("no peaks found in pulse signal")]
    NoPeaks,

    #[error("no {0} frames to average")]
    NoFrames(&'static str),

    #[error("feature stack: {0}")]
    Channels(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("could not place vessel {index} without overlap after {attempts} attempts")]
    Placement { index: usize, attempts: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
