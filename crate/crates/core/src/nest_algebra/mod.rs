//! Nest-algebra membership, the distance formula, nearest-element
//! computation, algebra-distance lower bounds, distance-one
//! certificates, and the exact counterexample family.

mod certificate;
mod counterexample;
mod lower_bound;
mod nearest;

pub use certificate::{
    distance_one_certificate, CertificateCase, DistanceCertificate, RankOneWitness,
};
pub use counterexample::{counterexample_family, CounterexampleInstance};
pub use lower_bound::{
    kk_distance_estimate, rank_one_lower_bound, KKEstimate, RankOneBound, WitnessSide,
};
pub use nearest::nearest_element;

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, ComplexMatrix, Tolerances};
use crate::nests::{atoms, Nest};

/// Operator certified to lie in a nest algebra.
#[derive(Debug, Clone)]
pub struct AlgebraElement<'a> {
    t: ComplexMatrix,
    nest: &'a Nest,
    residual: f64,
}

impl<'a> AlgebraElement<'a> {
    /// Certify membership of `t` in the nest algebra of `nest`.
    pub fn new(t: ComplexMatrix, nest: &'a Nest, tol: &Tolerances) -> Result<Self> {
        let (member, residual) = contains(&t, nest, tol)?;
        if !member {
            return Err(Error::InvariantViolation(format!(
                "operator is not in the nest algebra (residual {residual:.3e})"
            )));
        }
        Ok(AlgebraElement { t, nest, residual })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.t
    }

    pub fn nest(&self) -> &Nest {
        self.nest
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }
}

/// Membership test: `t` lies in the nest algebra iff it leaves every
/// element invariant, measured by `max_k ||P_k^perp T P_k||`.
pub fn contains(t: &ComplexMatrix, n: &Nest, tol: &Tolerances) -> Result<(bool, f64)> {
    let residual = arveson_distance(t, n)?.0;
    Ok((residual < tol.eq_abs, residual))
}

/// Distance from an operator to the nest algebra: the exact maximum of
/// `||P_k^perp T P_k||` over nest elements, with the attaining index.
pub fn arveson_distance(t: &ComplexMatrix, n: &Nest) -> Result<(f64, usize)> {
    if !t.is_square() || t.rows() != n.dim() {
        return Err(Error::DimensionMismatch { left: t.rows(), right: n.dim() });
    }
    let eye = ComplexMatrix::identity(n.dim());
    let mut best = (0.0f64, 0usize);
    for (k, el) in n.elements().iter().enumerate() {
        if el.rank() == 0 || el.rank() == n.dim() {
            continue; // the corners at 0 and I vanish identically
        }
        let p = el.matrix();
        let pperp = &eye - p;
        let corner = &(&pperp * t) * p;
        let norm = spectral_norm(&corner)?;
        if norm > best.0 {
            best = (norm, k);
        }
    }
    Ok(best)
}

/// A nest's adapted frame: unitary change of basis in which the algebra
/// is exactly the block upper-triangular pattern of the atom sizes.
#[derive(Debug, Clone)]
pub(crate) struct AdaptedFrame {
    pub z: ComplexMatrix,
    pub sizes: Vec<usize>,
    pub offsets: Vec<usize>,
}

impl AdaptedFrame {
    pub fn new(nest: &Nest) -> Result<Self> {
        let z = nest.adapted_basis()?;
        let sizes: Vec<usize> = atoms(nest).iter().map(|a| a.rank).collect();
        let mut offsets = vec![0usize];
        for &s in &sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        Ok(AdaptedFrame { z, sizes, offsets })
    }

    pub fn block_count(&self) -> usize {
        self.sizes.len()
    }

    /// Conjugate into frame coordinates: `Z* T Z`.
    pub fn to_frame(&self, t: &ComplexMatrix) -> ComplexMatrix {
        &(&self.z.adjoint() * t) * &self.z
    }

    /// Conjugate back to ambient coordinates: `Z T Z*`.
    pub fn from_frame(&self, tt: &ComplexMatrix) -> ComplexMatrix {
        &(&self.z * tt) * &self.z.adjoint()
    }

    /// Zero the strictly lower blocks of a frame-coordinate matrix.
    pub fn zero_strict_lower(&self, tt: &ComplexMatrix) -> ComplexMatrix {
        let mut out = tt.clone();
        for i in 1..self.block_count() {
            for row in self.offsets[i]..self.offsets[i + 1] {
                for col in 0..self.offsets[i] {
                    out.set(row, col, num_complex::Complex64::new(0.0, 0.0));
                }
            }
        }
        out
    }
}

/// Compress an operator onto the nest algebra by zeroing its strictly
/// lower blocks in the adapted frame (triangular truncation).
pub fn upper_triangular_part(t: &ComplexMatrix, n: &Nest) -> Result<ComplexMatrix> {
    if !t.is_square() || t.rows() != n.dim() {
        return Err(Error::DimensionMismatch { left: t.rows(), right: n.dim() });
    }
    let frame = AdaptedFrame::new(n)?;
    let tt = frame.to_frame(t);
    Ok(frame.from_frame(&frame.zero_strict_lower(&tt)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nests::nest_from_flag;
    use num_complex::Complex64;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn standard_flag(dim: usize) -> Nest {
        let dims: Vec<usize> = (0..=dim).collect();
        nest_from_flag(&dims, &ComplexMatrix::identity(dim), &tol()).unwrap()
    }

    #[test]
    fn contains_upper_triangular() {
        let t = ComplexMatrix::from_real_rows(3, 3, &[1.0, 2.0, 3.0, 0.0, 4.0, 5.0, 0.0, 0.0, 6.0])
            .unwrap();
        let n = standard_flag(3);
        let (member, residual) = contains(&t, &n, &tol()).unwrap();
        assert!(member);
        assert!(residual < 1e-14);
    }

    #[test]
    fn contains_rejects_lower_corner() {
        // e2 e1* against {0, span e1, C^2}
        let t = ComplexMatrix::from_real_rows(2, 2, &[0.0, 0.0, 1.0, 0.0]).unwrap();
        let n = standard_flag(2);
        let (member, residual) = contains(&t, &n, &tol()).unwrap();
        assert!(!member);
        assert!((residual - 1.0).abs() < 1e-14);
    }

    #[test]
    fn contains_rank_one_from_interval() {
        // zeta in N_plus, eta orthogonal to N: zeta = e2, eta = e2 against
        // the nest {0, span e1, C^2}; zeta eta* = e2 e2*
        let zeta = ComplexMatrix::column_vector(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        let eta = zeta.clone();
        let t = &zeta * &eta.adjoint();
        let n = standard_flag(2);
        let (member, residual) = contains(&t, &n, &tol()).unwrap();
        assert!(member, "residual {residual}");
    }

    #[test]
    fn arveson_distance_of_member_is_zero() {
        let t = ComplexMatrix::from_real_rows(2, 2, &[1.0, 5.0, 0.0, -2.0]).unwrap();
        let n = standard_flag(2);
        let (d, _) = arveson_distance(&t, &n).unwrap();
        assert!(d < 1e-14);
    }

    #[test]
    fn arveson_distance_single_corner() {
        let t = ComplexMatrix::from_real_rows(2, 2, &[0.0, 0.0, 1.0, 0.0]).unwrap();
        let n = standard_flag(2);
        let (d, k) = arveson_distance(&t, &n).unwrap();
        assert!((d - 1.0).abs() < 1e-14);
        assert_eq!(k, 1);
    }

    #[test]
    fn upper_triangular_part_is_member() {
        let t = ComplexMatrix::from_fn(4, 4, |i, j| {
            Complex64::new((i * 4 + j) as f64 / 7.0, ((i + j) % 3) as f64 / 5.0)
        });
        let n = nest_from_flag(&[0, 2, 4], &ComplexMatrix::identity(4), &tol()).unwrap();
        let upper = upper_triangular_part(&t, &n).unwrap();
        let (member, _) = contains(&upper, &n, &tol()).unwrap();
        assert!(member);
    }

    #[test]
    fn algebra_element_certifies() {
        let n = standard_flag(2);
        let good = ComplexMatrix::from_real_rows(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(AlgebraElement::new(good, &n, &tol()).is_ok());
        let bad = ComplexMatrix::from_real_rows(2, 2, &[0.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(AlgebraElement::new(bad, &n, &tol()).is_err());
    }

    #[test]
    fn dimension_mismatch_detected() {
        let t = ComplexMatrix::identity(3);
        let n = standard_flag(2);
        assert!(matches!(arveson_distance(&t, &n), Err(Error::DimensionMismatch { .. })));
    }
}
