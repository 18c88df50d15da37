use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("supercritical exponent: n + Σθ = {dim} ≤ p = {p}")]
    Supercritical { dim: f64, p: f64 },

    /// The weight is not locally integrable on a singular set touched by the region.
    #[error("divergent measure: exponent {exponent} is not integrable at {set}")]
    DivergentMeasure { set: String, exponent: f64 },

    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),

    #[error("unsupported region: {0}")]
    UnsupportedRegion(String),

    #[error("mesh quality violation: {0}")]
    MeshQuality(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}
