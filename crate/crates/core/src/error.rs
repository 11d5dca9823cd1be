use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("window covariance is not positive semidefinite (most negative eigenvalue estimate {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("circulant embedding has a negative spectrum entry {min_eigenvalue:e} (largest {max_eigenvalue:e})")]
    EmbeddingFailed { min_eigenvalue: f64, max_eigenvalue: f64 },
    #[error("face count exceeded the cap of {cap}")]
    FaceExplosion { cap: usize },
    #[error("search cap of {cap} exceeded while {what}")]
    SearchCapExceeded { cap: u64, what: String },
    #[error("outside the supported range: {0}")]
    LimitExceeded(String),
    #[error("level schedule undefined: {0}")]
    ScheduleUndefined(String),
    #[error("hypothesis of the {rule} closed form violated: {detail}")]
    HypothesisViolated { rule: &'static str, detail: String },
    #[error("non-positive denominator in {0}")]
    DegenerateDenominator(String),
    #[error("Savage condition fails: u M^-1 = {delta:?} is not componentwise positive")]
    SavageConditionFails { delta: Vec<f64> },
    #[error("unsupported matrix shape: {0}")]
    UnsupportedShape(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("integer overflow while {0}")]
    CountOverflow(String),
    #[error("cache mismatch: {0}")]
    CacheMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
