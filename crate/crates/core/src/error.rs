use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series must hold at least one coefficient")]
    EmptySeries,

    #[error("coefficient {index} has modulus {modulus:e}, above the growth envelope {envelope:e}")]
    GrowthViolation {
        index: usize,
        modulus: f64,
        envelope: f64,
    },

    #[error("unknown catalog function `{0}`")]
    UnknownFunction(String),

    #[error("series is not normalized: {0}")]
    Normalization(String),

    #[error("radius {0} is outside (0, 1)")]
    Radius(f64),

    #[error("sample count {count} must be a power of two and at least {min}")]
    SampleCount { count: usize, min: usize },

    #[error("exponent p = 0 has no integral mean")]
    ZeroExponent,

    #[error("negative exponent needs a zero-free circle, but min |f| = {min_modulus:e} (error bound {err:e})")]
    NotZeroFree { min_modulus: f64, err: f64 },

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("grid size {0} is too small")]
    GridSize(usize),

    #[error("profiles are on different grids")]
    GridMismatch,

    #[error("invalid measure: {0}")]
    Measure(String),

    #[error("invalid driving: {0}")]
    Driving(String),

    #[error("step-halving check failed: coefficients differ by {diff:e} (limit {limit:e})")]
    NotCertified { diff: f64, limit: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("json error: {0}")]
    Json(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
