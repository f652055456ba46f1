use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}; only 1 and 2 are supported")]
    UnsupportedDimension(usize),

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("field has nonzero mean {mean:e} (scale {scale:e}); split the mean before inverting")]
    NonzeroMean { mean: f64, scale: f64 },

    #[error("kernel radius {radius} is under-resolved by spacing {spacing}")]
    Unresolved { radius: f64, spacing: f64 },

    #[error("solver diverged at t = {time}: norm {norm:e}")]
    Diverged { time: f64, norm: f64 },

    #[error("all errors are at or below the floor {floor:e}; agreement is exact")]
    ExactAgreement { floor: f64 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
