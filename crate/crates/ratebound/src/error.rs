use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rating scale needs at least 2 levels, got {0}")]
    InvalidScale(usize),

    #[error("invalid alpha vector: {0}")]
    InvalidAlpha(String),

    /// The largest alpha component is tied (or the gap to the runner-up is
    /// numerically zero), so the majority-rule ground truth and every bound
    /// built on it are undefined.
    #[error("majority label is not unique: the largest alpha component is tied")]
    DegenerateMajority,

    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),

    #[error("misbehaving fraction out of range: {0}")]
    InvalidFraction(f64),

    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),

    #[error("invalid inputs: {0}")]
    InvalidInputs(String),

    #[error("rating {level} is outside the scale 1..={m}")]
    OutOfScaleRating { level: usize, m: usize },

    #[error("no ratings supplied")]
    EmptyInput,

    /// Biased-win bound requested with too few attackers: below the win
    /// threshold the attack cannot succeed with high probability.
    #[error("fraction {fraction} does not exceed the win threshold {threshold}; the biased attackers cannot win")]
    BelowThreshold { fraction: f64, threshold: f64 },

    /// Resist bound requested with too many attackers: at or above the win
    /// threshold no finite number of ratings recovers the true label.
    #[error("fraction {fraction} is at or above the win threshold {threshold}; extraction is impossible")]
    AboveThreshold { fraction: f64, threshold: f64 },

    #[error("biased target equals the true label; resisting is moot (use the win bound)")]
    SameAsTruth,

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
