use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {0}: expected 1 or 2")]
    UnsupportedDimension(usize),

    #[error("points_per_axis must be odd and at least 3, got {0}")]
    InvalidPointCount(usize),

    #[error("half_width must be at least 8 so the Gaussian tail is resolved, got {0}")]
    HalfWidthTooSmall(f64),

    #[error("field has {got} samples but the grid holds {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value at sample {0}")]
    NonFinite(usize),

    #[error("weight exponent m={m} must exceed N/2={half_dim}")]
    WeightExponent { m: f64, half_dim: f64 },

    #[error("norm exponent p={0} must satisfy p >= 1")]
    NormExponent(f64),

    #[error("cutoff radius rho={0} must lie in (0,1)")]
    CutoffRadius(f64),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("explicit scheme unstable: dt={dt} exceeds h^2/(4N)={limit}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("truncated nonlinearity requires truncation parameters")]
    MissingTruncation,

    #[error("instability at tau={tau}: |v|={value} exceeds 1e6 times the initial sup")]
    Unstable { tau: f64, value: f64 },

    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),

    #[error("time t={0} must exceed 1 so that ln t > 0")]
    TimeTooSmall(f64),

    #[error("sample point {coordinate} lies outside the source grid [-{half_width}, {half_width}]")]
    OutsideGrid { coordinate: f64, half_width: f64 },

    #[error("trajectory too short: need at least {needed} records, got {got}")]
    TooFewRecords { needed: usize, got: usize },

    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, Error>;
