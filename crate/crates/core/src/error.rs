use thiserror::Error;

/// Errors raised by the linear algebra, scheme construction and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("matrix is near singular (condition number {cond:.3e} exceeds {limit:.1e})")]
    NearSingular { cond: f64, limit: f64 },

    #[error("matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("degenerate channels: retry budget of {retries} exhausted")]
    DegenerateChannels { retries: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
