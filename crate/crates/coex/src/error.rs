//! Crate-wide error type. Every fallible public operation returns
//! [`Result`], and validation failures carry enough context to repair
//! the offending input.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoexError {
    /// A scalar or structural parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Array or grid dimensions do not line up.
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A signal does not cover the receiver observation span at the
    /// requested timing offset.
    #[error("signal too short: need {needed} samples, have {got}")]
    SignalTooShort { needed: usize, got: usize },

    /// Subcarrier index outside the FFT grid.
    #[error("subcarrier {index} out of range (grid has {size})")]
    SubcarrierOutOfRange { index: usize, size: usize },

    /// Free and occupied band assignments intersect.
    #[error("free and incumbent bands overlap at subcarriers {indices:?}")]
    BandOverlap { indices: Vec<usize> },

    /// A lookup asked for a subcarrier distance the table does not hold.
    #[error("subcarrier distance {distance} outside table range [{min}, {max}]")]
    DistanceOutOfRange { distance: i64, min: i64, max: i64 },

    /// A lookup asked for an offset outside the tabulated grids.
    #[error("offset out of range: {0}")]
    OffsetOutOfRange(String),

    /// Underlying I/O failure while reading or writing artifacts.
    /// The cause is exposed through `source()`, not repeated in the message.
    #[error("io error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A persisted artifact could not be parsed.
    #[error("malformed file {path}: {detail}")]
    Malformed { path: String, detail: String },
}

pub type Result<T> = std::result::Result<T, CoexError>;

impl CoexError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CoexError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
