use thiserror::Error;

/// Errors produced by the grid, geometry, solver and pipeline layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("form degree {degree} is out of range for complex dimension {n} ({op})")]
    Degree {
        degree: usize,
        n: usize,
        op: &'static str,
    },

    #[error("non-finite sample in {0}")]
    NonFinite(&'static str),

    #[error("negative weight sample {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("invalid affine subspace: {0}")]
    InvalidSubspace(String),

    #[error("codimension {m} is below the required {required}")]
    Codimension { m: usize, required: usize },

    #[error("extension needs at least two complex variables, got n = {0}")]
    TooFewComplexDims(usize),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("datum is not d-bar closed: closedness {closedness:.3e} exceeds {gate:.1e}")]
    NotClosed { closedness: f64, gate: f64 },

    #[error("datum has weight {relative:.3e} on the kernel of the box operator (gate {gate:.1e})")]
    IncompatibleZeroMode { relative: f64, gate: f64 },

    #[error("test function is identically zero")]
    ZeroFunction,

    #[error("singular-weight integral {0:.3e} is degenerate")]
    DegenerateDenominator(f64),

    #[error("point at distance {distance:.3e} from H, need at least {required:.3e}")]
    TooCloseToSubspace { distance: f64, required: f64 },

    #[error("hypotheses failed: {0}")]
    HypothesisFailed(String),

    #[error("support of v leaks: {0}")]
    SupportLeak(String),

    #[error("far-field probe region is empty")]
    EmptyProbeRegion,

    #[error("Hardy inequality violated by member {index}: quotient {quotient:.6} < {bound:.6} ({config})")]
    HardyViolation {
        index: usize,
        quotient: f64,
        bound: f64,
        config: String,
    },

    #[error("invalid input function: {0}")]
    InvalidFunction(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
