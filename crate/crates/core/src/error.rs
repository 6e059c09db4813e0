//! Error type shared by all pipeline stages.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("timestep {t} out of range for schedule of length {len}")]
    TimestepOutOfRange { t: usize, len: usize },

    #[error("invalid noise schedule: {0}")]
    InvalidSchedule(String),

    #[error("probability {value} outside [0, 1]")]
    ProbabilityOutOfRange { value: f64 },

    #[error("target value {value} is not binary")]
    TargetNotBinary { value: f64 },

    #[error("negative power value {value}")]
    NegativePower { value: f64 },

    #[error("reference grid has zero energy")]
    ZeroEnergyReference,

    #[error("grid {dims:?} smaller than {window}x{window} window")]
    GridSmallerThanWindow { dims: (usize, usize), window: usize },

    #[error("sample mismatch: {0}")]
    SampleMismatch(String),

    #[error("frequency {frequency_hz} Hz outside the supported band set")]
    FrequencyOutsideBands { frequency_hz: f64 },

    #[error("all pixels are null")]
    AllNull,

    #[error("empty instance list")]
    EmptyInstanceList,

    #[error("bad container magic {found:?}")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported container version {found}")]
    UnsupportedVersion { found: u16 },

    #[error("container truncated at byte offset {offset}: {needed} more bytes required")]
    Truncated { offset: usize, needed: usize },

    #[error(
        "checksum mismatch in sample {sample_index} at byte offset {offset}: \
         expected {expected:#010x}, found {found:#010x}"
    )]
    ChecksumMismatch {
        sample_index: usize,
        offset: usize,
        expected: u32,
        found: u32,
    },

    #[error("unknown channel dtype code {code} at byte offset {offset}")]
    UnknownDtype { code: u8, offset: usize },

    #[error("invalid payload: {0}")]
    InvalidPayload(String),

    #[error("sample failed validation: {0}")]
    SampleInvalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("metadata error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
