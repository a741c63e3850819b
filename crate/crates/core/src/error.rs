use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("series is empty")]
    EmptySeries,
    #[error("every fund-flow value is zero; normalization is undefined")]
    AllZeroFlow,
    #[error("operating expenses must be positive, got {0}")]
    NonPositiveExpenses(f64),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("step {step}: |lambda * psi| * max(1, |phi|) = {magnitude:.4} >= 1, price could turn non-positive")]
    BlowupRisk { step: usize, magnitude: f64 },
    #[error("initial price must be positive, got {0}")]
    NonPositiveInitialPrice(f64),
    #[error("invalid regime segment: {0}")]
    InvalidSegment(String),
    #[error("schedule has no shock segment")]
    NoShockSegment,
    #[error("flow schedule has no segment with positive length")]
    EmptySchedule,
    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),
    #[error("series too short: need at least {min}, got {actual}")]
    TooShort { min: usize, actual: usize },
    #[error("not enough extrema to build envelopes ({maxima} maxima, {minima} minima)")]
    InsufficientExtrema { maxima: usize, minima: usize },
    #[error("series is constant")]
    ConstantSeries,
    #[error("series is not oscillatory (fewer than two maxima)")]
    NonOscillatory,
    #[error("series has no local maximum")]
    NoMaxima,
    #[error("input is constant; correlation undefined")]
    ConstantInput,
    #[error("|nu| = 1; p-value is zero by convention")]
    DegenerateCorrelation,
    #[error("no IMF passed the significance test")]
    NoSignificantImf,
    #[error("unsupported confidence level {0}; use 0.90, 0.95 or 0.99")]
    UnsupportedConfidence(f64),
    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error("{path}: row {row}: date {date} does not follow the previous row")]
    NonMonotoneDates {
        path: PathBuf,
        row: usize,
        date: String,
    },
    #[error("{path}: row {row}: price {value} is not positive")]
    NonPositivePrice {
        path: PathBuf,
        row: usize,
        value: f64,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("missing fixture {0}")]
    MissingFixture(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Tags an error with the pipeline stage it came from.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| match e {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        })
    }
}
