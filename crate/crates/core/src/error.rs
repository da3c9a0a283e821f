use std::path::PathBuf;

/// Errors produced anywhere in the sounding pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid Zadoff-Chu root: gcd({u}, {n_zc}) != 1")]
    InvalidRoot { n_zc: usize, u: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("decimation factor {m} aliases: must be below fs/delta_f = {limit:.3}")]
    Aliasing { m: usize, limit: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("filter design failed: {0}")]
    Design(String),

    #[error("missing coverage: {0}")]
    Coverage(String),

    #[error("calibration curve does not cover {freq} Hz")]
    Calibration { freq: f64 },

    #[error("no detectable leading path: {0}")]
    UndetectablePath(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("path window error: {0}")]
    Window(String),

    #[error("no qualifying path found in profile")]
    NoPath,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("undefined PAPR: waveform has zero power")]
    UndefinedPapr,

    #[error("empty profile: no mass above the noise floor")]
    EmptyProfile,

    #[error("malformed data in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
