//! Crate-wide error type.

use crate::grid::GridFamily;

/// Errors produced by validation and domain checks across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Basis and spectral quantities are indexed from k = 1.
    #[error("index k must be at least 1")]
    ZeroIndex,

    /// Function-space evaluations are defined on the unit interval.
    #[error("point x = {x} lies outside [0, 1]")]
    PointOutOfDomain { x: f64 },

    /// Sequence-coordinate index exceeded the valid range.
    #[error("coordinate index {k} out of range (must be below {limit})")]
    IndexOutOfRange { k: usize, limit: usize },

    /// A design grid needs at least two points.
    #[error("design grid needs n >= 2 (got n = {n})")]
    GridTooSmall { n: usize },

    /// Mismatched vector lengths.
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    /// The observation grid does not match the operator's discretely
    /// orthogonal design family.
    #[error("operator requires the {expected:?} design family, grid uses {actual:?}")]
    FamilyMismatch {
        expected: GridFamily,
        actual: GridFamily,
    },

    /// The mild-regime remainder and rate formulas require beta + p > 1/2.
    #[error("smoothness constraint violated: beta + p = {sum} must exceed 1/2")]
    SmoothnessConstraint { sum: f64 },

    /// Prior truncation is coupled to the sample size.
    #[error("prior truncation {truncation} must equal the sample size {n}")]
    TruncationMismatch { truncation: usize, n: usize },

    /// A parameter that must be strictly positive was not.
    #[error("parameter `{name}` must be positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },

    /// Credibility levels live strictly inside (0, 1).
    #[error("gamma must lie in (0, 1) (got {gamma})")]
    GammaOutOfRange { gamma: f64 },

    /// Miscellaneous validation failure with a human-readable message.
    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
