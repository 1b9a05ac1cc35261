use thiserror::Error;

use crate::classify::SampleClass;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {what}: {detail}")]
    InvalidParameter { what: &'static str, detail: String },

    #[error("unknown liquid `{0}`")]
    UnknownLiquid(String),

    #[error("FFT length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("frequency {frequency} Hz is not below the Nyquist limit of {nyquist} Hz")]
    AboveNyquist { frequency: f64, nyquist: f64 },

    #[error("ADC saturated: {clipped} of {total} samples clipped")]
    Saturation { clipped: usize, total: usize },

    #[error(
        "calibration classes overlap: max({lower}) = {lower_max} >= min({upper}) = {upper_min}"
    )]
    ClassOverlap {
        lower: SampleClass,
        upper: SampleClass,
        lower_max: f64,
        upper_min: f64,
    },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("address ({q}, {r}) is outside the electrode array")]
    OutOfArray { q: i32, r: i32 },

    #[error("invalid routing table: {0}")]
    Routing(String),

    #[error("thresholds are not calibrated: {0}")]
    Uncalibrated(String),

    #[error("droplets collide on electrode ({q}, {r}) at tick {tick}")]
    Collision { tick: usize, q: i32, r: i32 },

    #[error("invalid movement script: {0}")]
    Script(String),

    #[error("no common frequency between measurement and signature `{0}`")]
    NoCommonFrequency(String),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            what,
            detail: detail.into(),
        }
    }
}
