//! Finite nests as flags of projections: Hausdorff nest distance,
//! order-isomorphism recovery with dimension preservation, and the
//! similarity implementing a recovered isomorphism.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    orthonormalize, rank_tol, singular_values, spectral_norm, ComplexMatrix, Tolerances,
};
use crate::projections::{nearest_in_chain, projection_from_basis, Projection};

/// Strictly increasing finite flag of projections from 0 to the identity.
#[derive(Debug, Clone)]
pub struct Nest {
    dim: usize,
    elements: Vec<Projection>,
}

impl Nest {
    /// Validate a flag: ranks strictly increasing from 0 to `dim`, each
    /// element absorbed by the next (`P_k P_{k+1} = P_k`).
    pub fn new(elements: Vec<Projection>, tol: &Tolerances) -> Result<Self> {
        let first = elements.first().ok_or_else(|| Error::BadFlag {
            reason: "a nest needs at least the elements 0 and I".into(),
        })?;
        let dim = first.dim();
        if first.rank() != 0 {
            return Err(Error::BadFlag { reason: "first element must have rank 0".into() });
        }
        let last = elements.last().expect("nonempty");
        if last.rank() != dim {
            return Err(Error::BadFlag {
                reason: format!("last element has rank {} instead of {}", last.rank(), dim),
            });
        }
        for pair in elements.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.dim() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: b.dim() });
            }
            if a.rank() >= b.rank() {
                return Err(Error::BadFlag {
                    reason: format!("ranks not strictly increasing ({} then {})", a.rank(), b.rank()),
                });
            }
            let absorb = spectral_norm(&(&(a.matrix() * b.matrix()) - a.matrix()))?;
            if absorb > tol.eq_abs {
                return Err(Error::BadFlag {
                    reason: format!("elements not nested (defect {absorb:.3e})"),
                });
            }
        }
        Ok(Nest { dim, elements })
    }

    /// The trivial nest `{0, H}`.
    pub fn trivial(dim: usize) -> Self {
        Nest { dim, elements: vec![Projection::zero(dim), Projection::identity(dim)] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[Projection] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Ranks of the elements, i.e. the flag signature.
    pub fn dims(&self) -> Vec<usize> {
        self.elements.iter().map(|e| e.rank()).collect()
    }

    /// Unitary whose leading `rank(elements[k])` columns span each
    /// element; columns are grouped by atoms.
    pub fn adapted_basis(&self) -> Result<ComplexMatrix> {
        let mut cols: Vec<ComplexMatrix> = Vec::new();
        for atom in atoms(self) {
            let basis = atom
                .projection
                .range_basis()
                .ok_or_else(|| Error::InvariantViolation("atom with empty range".into()))?;
            cols.push(basis);
        }
        let parts: Vec<&ComplexMatrix> = cols.iter().collect();
        let stacked = ComplexMatrix::hcat(&parts)?;
        // The atom bases are orthogonal across atoms up to roundoff; a QR
        // pass makes the result exactly orthonormal without moving spans.
        orthonormalize(&stacked)
    }
}

/// Interval between a nest element and its successor.
#[derive(Debug, Clone)]
pub struct Atom {
    /// Index of the lower endpoint in the nest.
    pub index: usize,
    pub projection: Projection,
    pub rank: usize,
}

/// The atoms of a finite nest, one per consecutive pair of elements.
pub fn atoms(n: &Nest) -> Vec<Atom> {
    let els = n.elements();
    let mut out = Vec::with_capacity(els.len() - 1);
    for k in 0..els.len() - 1 {
        let diff = els[k + 1].matrix() - els[k].matrix();
        let rank = els[k + 1].rank() - els[k].rank();
        out.push(Atom { index: k, projection: Projection::from_parts(diff, rank), rank });
    }
    out
}

/// Next element above index `k`; for finite nests the meet of strict
/// successors is simply the next element.
pub fn successor(n: &Nest, k: usize) -> Result<&Projection> {
    if k + 1 >= n.len() {
        return Err(Error::NoSuccessor);
    }
    Ok(&n.elements()[k + 1])
}

/// Build a nest from a flag signature and basis columns: element `k`
/// projects onto the span of the first `dims[k]` orthonormalized columns.
pub fn nest_from_flag(dims: &[usize], basis: &ComplexMatrix, tol: &Tolerances) -> Result<Nest> {
    let dim = basis.rows();
    if dims.first() != Some(&0) || dims.last() != Some(&dim) {
        return Err(Error::BadFlag {
            reason: format!("flag signature must run from 0 to {dim}, got {dims:?}"),
        });
    }
    if dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadFlag { reason: format!("signature not strictly increasing: {dims:?}") });
    }
    if basis.cols() < dim {
        return Err(Error::BadFlag {
            reason: format!("basis has {} columns, needs {dim}", basis.cols()),
        });
    }
    let q = orthonormalize(&basis.leading_columns(dim))?;
    let mut elements = Vec::with_capacity(dims.len());
    for &d in dims {
        if d == 0 {
            elements.push(Projection::zero(dim));
        } else if d == dim {
            elements.push(Projection::identity(dim));
        } else {
            let lead = q.leading_columns(d);
            elements.push(Projection::from_parts(&lead * &lead.adjoint(), d));
        }
    }
    Nest::new(elements, tol)
}

/// Hausdorff distance between the element sets of two nests.
pub fn nest_distance(m: &Nest, n: &Nest) -> Result<f64> {
    if m.dim() != n.dim() {
        return Err(Error::DimensionMismatch { left: m.dim(), right: n.dim() });
    }
    let one_sided = |xs: &Nest, ys: &Nest| -> Result<f64> {
        let mut sup = 0.0f64;
        for x in xs.elements() {
            let mut inf = f64::INFINITY;
            for y in ys.elements() {
                inf = inf.min(spectral_norm(&(x.matrix() - y.matrix()))?);
            }
            sup = sup.max(inf);
        }
        Ok(sup)
    };
    Ok(one_sided(m, n)?.max(one_sided(n, m)?))
}

/// Order isomorphism between two nests recovered from proximity, with
/// its norm `gamma` and the paired atom-rank table.
#[derive(Debug, Clone)]
pub struct OrderIsomorphism {
    pub source: Nest,
    pub target: Nest,
    /// Order-preserving bijection as index pairs.
    pub pairing: Vec<(usize, usize)>,
    /// `max_k ||P_{M_k} - P_{theta(M_k)}||`
    pub gamma: f64,
    /// Paired (source, target) atom ranks.
    pub atom_ranks: Vec<(usize, usize)>,
}

/// Recover the unique order isomorphism between nests at distance `< 1`.
///
/// Each source element is paired with the unique target element within
/// distance one; the pairing is checked to be an order-preserving
/// bijection that preserves atom ranks.
pub fn recover_order_iso(m: &Nest, n: &Nest, tol: &Tolerances) -> Result<OrderIsomorphism> {
    let d = nest_distance(m, n)?;
    if d >= 1.0 - tol.eq_abs {
        return Err(Error::TooFar { distance: d });
    }
    let mut pairing = Vec::with_capacity(m.len());
    let mut gamma = 0.0f64;
    for (i, el) in m.elements().iter().enumerate() {
        let j = nearest_in_chain(el, n.elements(), tol)?.ok_or(Error::TooFar { distance: d })?;
        gamma = gamma.max(spectral_norm(&(el.matrix() - n.elements()[j].matrix()))?);
        pairing.push((i, j));
    }
    // Distance < 1 forces a bijection; verify instead of trusting floats.
    if m.len() != n.len() {
        return Err(Error::TooFar { distance: d });
    }
    for w in pairing.windows(2) {
        if w[1].1 <= w[0].1 {
            return Err(Error::UniquenessViolated { first: w[0].1, second: w[1].1 });
        }
    }
    let m_atoms = atoms(m);
    let n_atoms = atoms(n);
    let atom_ranks: Vec<(usize, usize)> =
        m_atoms.iter().zip(&n_atoms).map(|(a, b)| (a.rank, b.rank)).collect();
    if atom_ranks.iter().any(|(a, b)| a != b) {
        return Err(Error::InvariantViolation(format!(
            "paired atom ranks differ: {atom_ranks:?}"
        )));
    }
    Ok(OrderIsomorphism { source: m.clone(), target: n.clone(), pairing, gamma, atom_ranks })
}

/// Which construction produced a similarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityConstruction {
    /// `S = sum_k DeltaQ_k DeltaP_k` over paired atoms; used for
    /// `gamma < 1/2` where it satisfies `||S - I|| <= 2 gamma`.
    AtomSum,
    /// Unitary mapping an atom-adapted basis onto an atom-adapted basis;
    /// always invertible, `||S - I|| <= 2`.
    Unitary,
}

/// Invertible operator implementing an order isomorphism.
#[derive(Debug, Clone)]
pub struct Similarity {
    pub s: ComplexMatrix,
    pub s_minus_i_norm: f64,
    /// `||S|| * ||S^{-1}||`
    pub condition: f64,
    pub construction: SimilarityConstruction,
}

/// Build an invertible `S` with `S M_k = theta(M_k)` for every element.
///
/// For `gamma < 1/2` the atom-sum construction is used and its norm bound
/// verified; otherwise (or if the sum is numerically singular) a unitary
/// mapping atom bases onto atom bases is returned.
pub fn build_similarity(iso: &OrderIsomorphism, tol: &Tolerances) -> Result<Similarity> {
    let dim = iso.source.dim();
    let mut choice = None;
    if iso.gamma < 0.5 {
        let mut s = ComplexMatrix::zeros(dim, dim);
        let m_atoms = atoms(&iso.source);
        let n_atoms = atoms(&iso.target);
        for (a, b) in m_atoms.iter().zip(&n_atoms) {
            s = &s + &(b.projection.matrix() * a.projection.matrix());
        }
        if rank_tol(&s, tol)? == dim {
            choice = Some((s, SimilarityConstruction::AtomSum));
        }
        // A singular atom sum falls through to the unitary construction.
    }
    let (s, construction) = match choice {
        Some(c) => c,
        None => {
            let zm = iso.source.adapted_basis()?;
            let zn = iso.target.adapted_basis()?;
            (&zn * &zm.adjoint(), SimilarityConstruction::Unitary)
        }
    };

    let eye = ComplexMatrix::identity(dim);
    let s_minus_i_norm = spectral_norm(&(&s - &eye))?;
    let sv = singular_values(&s)?;
    let (smax, smin) = (sv.first().copied().unwrap_or(0.0), sv.last().copied().unwrap_or(0.0));
    if smin <= 0.0 {
        return Err(Error::NotInvertible);
    }
    let condition = smax / smin;

    // S must carry each source subspace onto its paired target subspace.
    for (k, el) in iso.source.elements().iter().enumerate() {
        if let Some(basis) = el.range_basis() {
            let image = projection_from_basis(&(&s * &basis), tol)?;
            let defect =
                spectral_norm(&(image.matrix() - iso.target.elements()[k].matrix()))?;
            if defect > tol.eq_abs {
                return Err(Error::InvariantViolation(format!(
                    "similarity misses element {k} by {defect:.3e}"
                )));
            }
        }
    }
    Ok(Similarity { s, s_minus_i_norm, condition, construction })
}

/// Deterministically perturb a nest: apply `G = I + strength * R` with
/// `R` random of unit spectral norm, then re-orthonormalize the flag.
/// The result has the same flag signature, hence the same atom ranks.
pub fn random_perturbed_nest(n: &Nest, strength: f64, seed: u64, tol: &Tolerances) -> Result<Nest> {
    if !(0.0..1.0).contains(&strength) {
        return Err(Error::OutOfRange {
            reason: format!("perturbation strength {strength} outside [0, 1)"),
        });
    }
    let dim = n.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = ComplexMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
    });
    let norm = spectral_norm(&r)?;
    let g = if norm > 0.0 {
        let unit = r.scale(Complex64::new(strength / norm, 0.0));
        &ComplexMatrix::identity(dim) + &unit
    } else {
        ComplexMatrix::identity(dim)
    };
    let basis = n.adapted_basis()?;
    nest_from_flag(&n.dims(), &(&g * &basis), tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn standard_flag(dim: usize) -> Nest {
        let dims: Vec<usize> = (0..=dim).collect();
        nest_from_flag(&dims, &ComplexMatrix::identity(dim), &tol()).unwrap()
    }

    fn rotated_line_nest(angle: f64) -> Nest {
        let (c, s) = (angle.cos(), angle.sin());
        let basis = ComplexMatrix::from_real_rows(2, 2, &[c, -s, s, c]).unwrap();
        nest_from_flag(&[0, 1, 2], &basis, &tol()).unwrap()
    }

    #[test]
    fn flag_construction_standard() {
        let n = standard_flag(2);
        assert_eq!(n.len(), 3);
        assert_eq!(n.dims(), vec![0, 1, 2]);
        let mid = &n.elements()[1];
        let expected = ComplexMatrix::from_real_rows(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(spectral_norm(&(mid.matrix() - &expected)).unwrap() < 1e-12);
    }

    #[test]
    fn flag_construction_rotated_matches_line_projection() {
        let angle = 0.6f64;
        let n = rotated_line_nest(angle);
        let (c, s) = (angle.cos(), angle.sin());
        let expected =
            ComplexMatrix::from_real_rows(2, 2, &[c * c, c * s, c * s, s * s]).unwrap();
        assert!(spectral_norm(&(n.elements()[1].matrix() - &expected)).unwrap() < 1e-12);
    }

    #[test]
    fn flag_trivial_nest() {
        let n = nest_from_flag(&[0, 2], &ComplexMatrix::identity(2), &tol()).unwrap();
        assert_eq!(n.len(), 2);
        assert_eq!(atoms(&n).len(), 1);
        assert_eq!(atoms(&n)[0].rank, 2);
    }

    #[test]
    fn flag_rejects_bad_signatures() {
        let eye = ComplexMatrix::identity(2);
        assert!(matches!(nest_from_flag(&[0, 1], &eye, &tol()), Err(Error::BadFlag { .. })));
        assert!(matches!(nest_from_flag(&[1, 2], &eye, &tol()), Err(Error::BadFlag { .. })));
        assert!(matches!(nest_from_flag(&[0, 1, 1, 2], &eye, &tol()), Err(Error::BadFlag { .. })));
    }

    #[test]
    fn atoms_of_standard_flag() {
        let n = standard_flag(3);
        let ats = atoms(&n);
        assert_eq!(ats.len(), 3);
        assert!(ats.iter().all(|a| a.rank == 1));
        assert_eq!(ats.iter().map(|a| a.rank).sum::<usize>(), 3);
    }

    #[test]
    fn atoms_of_two_step_flag() {
        let n = nest_from_flag(&[0, 2, 3], &ComplexMatrix::identity(3), &tol()).unwrap();
        let ranks: Vec<usize> = atoms(&n).iter().map(|a| a.rank).collect();
        assert_eq!(ranks, vec![2, 1]);
    }

    #[test]
    fn successor_behavior() {
        let n = standard_flag(2);
        assert_eq!(successor(&n, 0).unwrap().rank(), 1);
        assert_eq!(successor(&n, 1).unwrap().rank(), 2);
        assert!(matches!(successor(&n, 2), Err(Error::NoSuccessor)));
    }

    #[test]
    fn nest_distance_identical() {
        let n = standard_flag(3);
        assert!(nest_distance(&n, &n.clone()).unwrap() < 1e-14);
    }

    #[test]
    fn nest_distance_rotated_lines() {
        let s = 0.8f64;
        let angle = s.asin();
        let m = standard_flag(2);
        let n = rotated_line_nest(angle);
        let d = nest_distance(&m, &n).unwrap();
        assert!((d - s).abs() < 1e-12);
    }

    #[test]
    fn nest_distance_orthogonal_lines() {
        let m = standard_flag(2);
        let n = rotated_line_nest(std::f64::consts::FRAC_PI_2);
        assert!((nest_distance(&m, &n).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn order_iso_identity() {
        let n = standard_flag(3);
        let iso = recover_order_iso(&n, &n.clone(), &tol()).unwrap();
        assert!(iso.gamma < 1e-12);
        assert!(iso.pairing.iter().all(|&(i, j)| i == j));
    }

    #[test]
    fn order_iso_example_nests() {
        let s = 0.8f64;
        let m = standard_flag(2);
        let n = rotated_line_nest(s.asin());
        let iso = recover_order_iso(&m, &n, &tol()).unwrap();
        assert!((iso.gamma - s).abs() < 1e-12);
        assert_eq!(iso.pairing, vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(iso.atom_ranks, vec![(1, 1), (1, 1)]);
    }

    #[test]
    fn order_iso_rejects_distance_one() {
        let m = standard_flag(2);
        let n = rotated_line_nest(std::f64::consts::FRAC_PI_2);
        assert!(matches!(recover_order_iso(&m, &n, &tol()), Err(Error::TooFar { .. })));
    }

    #[test]
    fn similarity_identity_iso() {
        let n = standard_flag(3);
        let iso = recover_order_iso(&n, &n.clone(), &tol()).unwrap();
        let sim = build_similarity(&iso, &tol()).unwrap();
        assert!(sim.s_minus_i_norm < 1e-10);
        assert_eq!(sim.construction, SimilarityConstruction::AtomSum);
    }

    #[test]
    fn similarity_small_gamma_respects_bound() {
        let gamma_target = 0.3f64;
        let m = standard_flag(2);
        let n = rotated_line_nest(gamma_target.asin());
        let iso = recover_order_iso(&m, &n, &tol()).unwrap();
        let sim = build_similarity(&iso, &tol()).unwrap();
        assert!(sim.s_minus_i_norm <= 2.0 * iso.gamma + 1e-8, "{}", sim.s_minus_i_norm);
        assert_eq!(sim.construction, SimilarityConstruction::AtomSum);
    }

    #[test]
    fn similarity_large_gamma_uses_unitary() {
        let m = standard_flag(2);
        let n = rotated_line_nest(0.8f64.asin());
        let iso = recover_order_iso(&m, &n, &tol()).unwrap();
        let sim = build_similarity(&iso, &tol()).unwrap();
        assert_eq!(sim.construction, SimilarityConstruction::Unitary);
        assert!(sim.s_minus_i_norm <= 2.0 + 1e-12);
        assert!((sim.condition - 1.0).abs() < 1e-10);
    }

    #[test]
    fn perturbed_nest_properties() {
        let n = nest_from_flag(&[0, 1, 3, 4], &ComplexMatrix::identity(4), &tol()).unwrap();
        let same = random_perturbed_nest(&n, 0.0, 5, &tol()).unwrap();
        assert!(nest_distance(&n, &same).unwrap() < 1e-10);

        let a = random_perturbed_nest(&n, 0.1, 5, &tol()).unwrap();
        let b = random_perturbed_nest(&n, 0.1, 5, &tol()).unwrap();
        assert!(nest_distance(&a, &b).unwrap() < 1e-12, "deterministic in seed");

        let c = random_perturbed_nest(&n, 0.1, 6, &tol()).unwrap();
        assert!(nest_distance(&a, &c).unwrap() > 1e-6, "different seeds differ");
        assert_eq!(a.dims(), n.dims());
        assert_eq!(c.dims(), n.dims());

        let iso = recover_order_iso(&n, &a, &tol()).unwrap();
        assert!(iso.pairing.iter().all(|&(i, j)| i == j));
    }

    #[test]
    fn perturbed_nest_rejects_bad_strength() {
        let n = standard_flag(2);
        assert!(random_perturbed_nest(&n, 1.0, 1, &tol()).is_err());
        assert!(random_perturbed_nest(&n, -0.1, 1, &tol()).is_err());
    }
}
