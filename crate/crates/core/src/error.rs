use thiserror::Error;

pub type Result<T, E = FgaError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FgaError {
    #[error("invalid parameter {name} = {value}")]
    InvalidParam { name: &'static str, value: f64 },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("all points coincide after centering, normalization extent is zero")]
    DegenerateExtent,

    #[error("RBF collocation matrix is numerically singular")]
    SingularCollocation,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("weight {index} is not finite ({value})")]
    NonFiniteWeight { index: usize, value: f64 },

    #[error("mass {index} must be positive and finite, got {value}")]
    InvalidMass { index: usize, value: f64 },

    #[error("landmark pair {index} out of bounds or duplicated")]
    InvalidLandmark { index: usize },

    #[error("matrix is not a proper rotation (orthonormality error {ortho_err:e}, det {det})")]
    NotARotation { ortho_err: f64, det: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("at least {required} frames are required, got {actual}")]
    TooFewFrames { required: usize, actual: usize },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for FgaError {
    fn from(err: std::io::Error) -> Self {
        FgaError::Io(err.to_string())
    }
}
