use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("invalid edge weight {weight} on ({src}, {dst})")]
    InvalidWeight { src: usize, dst: usize, weight: f64 },

    #[error("self-loop on vertex {0} is not allowed")]
    SelfLoop(usize),

    #[error("vertex set is empty")]
    EmptyVertexSet,

    #[error("duplicate vertex {0} in vertex set")]
    DuplicateVertex(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("function value {value} at eigenvalue {eigenvalue} is not admissible")]
    InvalidSpectralValue { eigenvalue: f64, value: f64 },

    #[error("covariance is identically zero")]
    ZeroCovariance,

    #[error("operator has zero norm")]
    ZeroNorm,

    #[error("matrix is not positive semi-definite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("insufficient samples: need {needed}, have {available}")]
    InsufficientSamples { needed: usize, available: usize },

    #[error("problem too large: {size} exceeds limit {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no threshold configuration leaves every regime with at least {min_occupancy} samples")]
    RegimeEmpty { min_occupancy: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("artifact mismatch: {0}")]
    ArtifactMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Validation failures (bad input, parameters, artifacts) as opposed to
    /// failures during computation.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Numerical(_) | Error::ZeroCovariance | Error::ZeroNorm | Error::RegimeEmpty { .. } | Error::NotPsd(_)
        )
    }
}
