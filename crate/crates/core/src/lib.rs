//! Finite-dimensional nest and nest-algebra numerics.
//!
//! The crate computes and verifies, at matrix scale, the geometry of
//! pairs of projections (distances, the canonical two-subspace model,
//! the partial-isometry gap), the Hausdorff distance between nests and
//! the order isomorphism it induces, similarities implementing such
//! isomorphisms, and distance bounds between the associated algebras of
//! block upper-triangular operators — including the exact
//! two-dimensional family where the nests are close but the algebras
//! are at maximal distance.

pub mod error;
pub mod linalg;
pub mod nest_algebra;
pub mod nests;
pub mod projections;
pub mod random;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Tolerances};
