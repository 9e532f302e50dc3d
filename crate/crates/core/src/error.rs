use thiserror::Error;

/// Errors raised anywhere in the simulation chain.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("KK reconstruction domain violated at {violations} of {total} samples (biased photocurrent <= 0)")]
    ReconstructDomain { violations: usize, total: usize },

    #[error("no positivity-restoring DC bias in [{lo:.4e}, {hi:.4e}]")]
    BiasSearch { lo: f64, hi: f64 },

    #[error("MDL calibration failed: target {target_db:.2} dB, achieved {achieved_db:.2} dB")]
    MdlCalibration { target_db: f64, achieved_db: f64 },

    #[error("matrix is rank deficient to machine precision ({context})")]
    RankDeficient { context: String },

    #[error("equalizer diverged at symbol {symbol}: output/input power ratio {power_ratio:.3e}")]
    Diverged {
        symbol: usize,
        power_ratio: f64,
        taps: Box<crate::dsp::TapTensor>,
    },

    #[error("stream misaligned with reference: hard-decision BER {ber:.3}")]
    Misaligned { ber: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
