//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors raised by the numerical operations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A matrix contains NaN or infinite entries.
    #[error("matrix contains a non-finite entry")]
    NonFinite,

    /// Entry count does not match the declared shape.
    #[error("entry count {got} does not match shape {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, got: usize },

    /// Columns are linearly dependent at the working rank tolerance.
    #[error("columns are rank deficient at the working tolerance")]
    RankDeficient,

    /// Two operands live on spaces of different dimension.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// Input fails the Hermitian-idempotent projection test.
    #[error("matrix is not a projection: {reason}")]
    NotProjection { reason: String },

    /// Tolerances outside the admissible range.
    #[error("invalid tolerances: {reason}")]
    BadTolerances { reason: String },

    /// Projections (or nests) are at distance 1, outside the regime
    /// where the close-perturbation results apply.
    #[error("operands are too far apart (distance {distance} is not < 1)")]
    TooFar { distance: f64 },

    /// A pair required to be orthogonal is not.
    #[error("projections are not orthogonal (product norm {norm})")]
    NotOrthogonal { norm: f64 },

    /// Two chain elements both lie within distance < 1 of the same
    /// projection. Mathematically impossible; signals a tolerance
    /// breakdown in the inputs.
    #[error("chain elements {first} and {second} are both within distance 1; tolerance breakdown")]
    UniquenessViolated { first: usize, second: usize },

    /// A flag description is not a strictly increasing chain from 0 to
    /// the ambient dimension.
    #[error("invalid flag: {reason}")]
    BadFlag { reason: String },

    /// Asked for the successor of the top nest element.
    #[error("top nest element has no successor")]
    NoSuccessor,

    /// A similarity construction produced a numerically singular
    /// operator.
    #[error("similarity construction produced a singular operator")]
    NotInvertible,

    /// Certificate requested for nests that are not at distance one.
    #[error("nests are not at distance one (distance {distance})")]
    NotDistanceOne { distance: f64 },

    /// Scalar parameter outside its admissible interval.
    #[error("parameter out of range: {reason}")]
    OutOfRange { reason: String },

    /// A numerically verified postcondition failed. Mathematically
    /// impossible under the stated preconditions; reported rather than
    /// silently returning a wrong certificate.
    #[error("numerical invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
