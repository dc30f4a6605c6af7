use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    RateMismatch { left: u32, right: u32 },
    #[error("unsupported sample rate {got} Hz (expected {expected} Hz)")]
    UnsupportedRate { got: u32, expected: u32 },
    #[error("signal too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error(
        "band centred at {center} Hz has upper edge {upper:.1} Hz at or above Nyquist {nyquist} Hz"
    )]
    BandRange {
        center: f64,
        upper: f64,
        nyquist: f64,
    },
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("cannot place sources: {0}")]
    Placement(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("empty room set")]
    EmptySet,
    #[error("insufficient decay: need {needed_db} dB, curve reaches {reached_db:.1} dB")]
    InsufficientDecay { needed_db: f64, reached_db: f64 },
    #[error("no late energy after the early window (clarity is infinite)")]
    InfiniteClarity,
    #[error("signal has zero energy")]
    ZeroEnergy,
    #[error("reference spectrogram is all zero")]
    DivisionByZero,
    #[error("no free-decay segment found in recording")]
    NoDecay,
    #[error("unsupported audio format: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Coarse error classes, used by front ends to choose exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Wav {
                source: hound::Error::IoError(_),
                ..
            } => ErrorKind::Io,
            Error::Wav { .. } => ErrorKind::Validation,
            Error::Io { .. } | Error::Json { .. } => ErrorKind::Io,
            Error::InsufficientDecay { .. }
            | Error::InfiniteClarity
            | Error::ZeroEnergy
            | Error::DivisionByZero
            | Error::NoDecay
            | Error::Degenerate(_) => ErrorKind::Numeric,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
