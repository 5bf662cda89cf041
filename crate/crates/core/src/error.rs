use thiserror::Error;

/// Errors raised by the discretization, the solvers and the experiment drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdgError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("point ({x}, {y}) lies outside the domain")]
    PointOutsideDomain { x: f64, y: f64 },

    #[error("unsupported polynomial degree {0} (only k = 1 is implemented)")]
    UnsupportedDegree(usize),

    #[error("invalid evaluation: {0}")]
    InvalidEvaluation(String),

    #[error("assembly failure: {0}")]
    AssemblyFailure(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("linear solve diverged: relative residual {residual:e} exceeds {tolerance:e}")]
    SolveDiverged { residual: f64, tolerance: f64 },

    #[error("postprocess failure on macro-element {0}")]
    PostprocessFailure(usize),

    #[error("marker {index} escaped the domain at ({x}, {y})")]
    MarkerEscaped { index: usize, x: f64, y: f64 },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("usage error: {0}")]
    Usage(String),
}

impl From<std::io::Error> for SdgError {
    fn from(e: std::io::Error) -> Self {
        SdgError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SdgError>;
