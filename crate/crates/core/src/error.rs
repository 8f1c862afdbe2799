use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum CaloricError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported derivative order {0} (maximum is 3)")]
    UnsupportedOrder(usize),
    #[error("degenerate division: {0}")]
    DegenerateDivision(String),
    #[error("cannot project the zero vector onto the sphere")]
    DegenerateProjection,
    #[error("tangency violated: |<v,u>| = {residual:e} exceeds {tolerance:e}")]
    TangencyViolation { residual: f64, tolerance: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("step refused: {step:e} exceeds the stability limit {limit:e}")]
    StabilityRefused { step: f64, limit: f64 },
    #[error("divergence detected at s = {s:e} (last good level {last_good_level})")]
    Divergence { s: f64, last_good_level: usize },
    #[error("wave evolution diverged at t = {t:e} (step {step})")]
    WaveDivergence { t: f64, step: usize },
    #[error("no admissible tangent seed axis at node {node}")]
    DegenerateFrame { node: usize },
    #[error("frame transport unstable: orthonormality drift {drift:e}")]
    TransportInstability { drift: f64 },
    #[error("limiting frames have opposite orientation at node {node}")]
    OrientationMismatch { node: usize },
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("inadmissible triple: {relation}")]
    Admissibility { relation: String },
    #[error("trajectory too short: {0}")]
    TooShort(String),
    #[error("heat ladder does not reach far enough: {0}")]
    InsufficientLadder(String),
    #[error("unsupported dimension d = {0}")]
    UnsupportedDimension(usize),
}

pub type Result<T> = std::result::Result<T, CaloricError>;
