use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample needs at least {required} points, got {found}")]
    EmptySample { required: usize, found: usize },

    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),

    #[error("movement bias must lie in [0, 1], got {0}")]
    InvalidBias(f64),

    #[error("sample point {row} has zero total weight; bandwidth too small for this kernel")]
    ZeroRow { row: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("integration domain has zero volume")]
    DegenerateDomain,

    #[error("Monte Carlo normalization needs at least {min} draws, got {found}")]
    TooFewDraws { min: usize, found: usize },

    #[error("every bandwidth grid point failed")]
    AllGridPointsFailed,

    #[error("density is zero at sample point {index}")]
    ZeroDensityAtSamplePoint { index: usize },

    #[error("covariance matrix is singular (eigenvalue ratio {ratio:e})")]
    SingularCovariance { ratio: f64 },

    #[error("point {value} lies below the reflection boundary {boundary}")]
    PointBelowBoundary { value: f64, boundary: f64 },

    #[error("value {value} outside the domain of the {transform} transform")]
    DomainViolation { value: f64, transform: &'static str },

    #[error("k = {k} out of range 1..={max}")]
    KOutOfRange { k: usize, max: usize },

    #[error("labels need at least one positive and one negative entry")]
    DegenerateLabels,

    #[error("{folds} folds need at least {folds} points, got {n}")]
    TooFewPoints { folds: usize, n: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
