use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mode index {mode} out of range for a {num_modes}-mode state")]
    ModeOutOfRange { mode: usize, num_modes: usize },

    #[error("beam splitter needs two distinct modes, got {0} twice")]
    SameMode(usize),

    #[error("detector groups must be disjoint and cover all {num_modes} modes: {reason}")]
    InvalidGrouping { num_modes: usize, reason: String },

    #[error("cutoff {cutoff} leaves truncation leakage {leakage:.3e} above {bound:.1e}; use a cutoff of at least {required}")]
    CutoffTooSmall {
        cutoff: usize,
        leakage: f64,
        bound: f64,
        required: usize,
    },

    #[error("basis with {modes} modes and cutoff {cutoff} has {states} states, above the limit of {limit}")]
    BasisTooLarge {
        modes: usize,
        cutoff: usize,
        states: usize,
        limit: usize,
    },

    #[error("click outcome ({k_a}, {k_b}) exceeds the detector bins ({bins_a}, {bins_b})")]
    ClicksExceedBins {
        k_a: usize,
        k_b: usize,
        bins_a: usize,
        bins_b: usize,
    },

    #[error("distribution has zero mean photon number")]
    ZeroMean,

    #[error("g2 = {0} is outside the thermal-mixture model range (1, 2]")]
    OutOfModel(f64),

    #[error("conditioning removed all probability mass")]
    AllMassRemoved,

    #[error("empty histogram")]
    EmptyHistogram,

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("at delay {delay_ps} ps: {source}")]
    AtDelay {
        delay_ps: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
