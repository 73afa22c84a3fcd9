//! Two-subspace geometry: distances between projections, the Halmos
//! canonical decomposition, the partial-isometry gap, the
//! rank-complement theorem, and closest-projection uniqueness in chains.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    complete_basis, polar_partial_isometry, rank_tol, spectral_norm, ComplexMatrix, Tolerances,
};

/// Hermitian idempotent matrix together with its ambient dimension and rank.
#[derive(Debug, Clone)]
pub struct Projection {
    p: ComplexMatrix,
    dim: usize,
    rank: usize,
}

impl Projection {
    /// Validate a candidate projection: square, Hermitian and idempotent
    /// within `eq_abs`.
    pub fn new(p: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        if !p.is_square() {
            return Err(Error::NotProjection { reason: "matrix is not square".into() });
        }
        if !p.is_finite() {
            return Err(Error::NonFinite);
        }
        let herm_defect = spectral_norm(&(&p - &p.adjoint()))?;
        if herm_defect > tol.eq_abs {
            return Err(Error::NotProjection {
                reason: format!("not Hermitian (defect {herm_defect:.3e})"),
            });
        }
        let idem_defect = spectral_norm(&(&(&p * &p) - &p))?;
        if idem_defect > tol.eq_abs {
            return Err(Error::NotProjection {
                reason: format!("not idempotent (defect {idem_defect:.3e})"),
            });
        }
        let dim = p.rows();
        let rank = rank_tol(&p, tol)?;
        Ok(Projection { p, dim, rank })
    }

    /// Zero projection on an n-dimensional space.
    pub fn zero(dim: usize) -> Self {
        Projection { p: ComplexMatrix::zeros(dim, dim), dim, rank: 0 }
    }

    /// Identity projection on an n-dimensional space.
    pub fn identity(dim: usize) -> Self {
        Projection { p: ComplexMatrix::identity(dim), dim, rank: dim }
    }

    /// Internal constructor for matrices that are projections by
    /// construction (products of orthonormal bases, validated nests).
    pub(crate) fn from_parts(p: ComplexMatrix, rank: usize) -> Self {
        let dim = p.rows();
        Projection { p, dim, rank }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Complementary projection `I - P`.
    pub fn complement(&self) -> Projection {
        let eye = ComplexMatrix::identity(self.dim);
        Projection { p: &eye - &self.p, dim: self.dim, rank: self.dim - self.rank }
    }

    /// Orthonormal basis of the range (n-by-rank), `None` for rank zero.
    pub fn range_basis(&self) -> Option<ComplexMatrix> {
        if self.rank == 0 {
            return None;
        }
        let svd = self.p.as_dmatrix().clone().svd(true, false);
        let u = svd.u.as_ref().expect("svd with u");
        let mut cols = Vec::new();
        for i in 0..svd.singular_values.len() {
            if svd.singular_values[i] > 0.5 {
                cols.push(i);
            }
        }
        let mut basis = DMatrix::<Complex64>::zeros(self.dim, cols.len());
        for (k, &i) in cols.iter().enumerate() {
            basis.view_mut((0, k), (self.dim, 1)).copy_from(&u.column(i));
        }
        Some(ComplexMatrix::from_dmatrix(basis))
    }
}

/// Orthogonal projection onto the column span of `vectors`.
pub fn projection_from_basis(vectors: &ComplexMatrix, _tol: &Tolerances) -> Result<Projection> {
    let q = crate::linalg::orthonormalize(vectors)?;
    let p = &q * &q.adjoint();
    Ok(Projection::from_parts(p, vectors.cols()))
}

/// The three norms attached to a pair of projections: the two corner
/// norms and the full distance.
#[derive(Debug, Clone, Copy)]
pub struct DistanceComponents {
    /// `||P Q^perp||`
    pub d_pq_perp: f64,
    /// `||P^perp Q||`
    pub d_pperp_q: f64,
    /// `||P - Q||`
    pub d: f64,
}

/// Distance between projections together with its two corner norms.
///
/// The distance always equals the larger corner norm, and the two corner
/// norms agree whenever the distance is below one.
pub fn proj_distance_components(p: &Projection, q: &Projection) -> Result<DistanceComponents> {
    check_same_dim(p, q)?;
    let qc = q.complement();
    let pc = p.complement();
    let d_pq_perp = spectral_norm(&(p.matrix() * qc.matrix()))?;
    let d_pperp_q = spectral_norm(&(pc.matrix() * q.matrix()))?;
    let d = spectral_norm(&(p.matrix() - q.matrix()))?;
    Ok(DistanceComponents { d_pq_perp, d_pperp_q, d })
}

/// Canonical two-projection decomposition: four corner subspaces plus a
/// generic part carrying the principal angles.
#[derive(Debug, Clone)]
pub struct HalmosDecomposition {
    /// Unitary change of basis; columns ordered `H00, H10, H01, H11, E, F`
    /// where the generic part is spanned by the pairs `(E_k, F_k)`.
    pub w: ComplexMatrix,
    pub d00: usize,
    pub d10: usize,
    pub d01: usize,
    pub d11: usize,
    /// Principal angles strictly inside `(0, pi/2)`, ascending.
    pub angles: Vec<f64>,
    pub c_diag: Vec<f64>,
    pub s_diag: Vec<f64>,
}

impl HalmosDecomposition {
    pub fn ambient_dim(&self) -> usize {
        self.w.rows()
    }

    fn generic_len(&self) -> usize {
        self.angles.len()
    }

    /// Canonical block form of the first projection.
    pub fn block_p(&self) -> ComplexMatrix {
        let n = self.ambient_dim();
        let m = self.generic_len();
        let mut bp = ComplexMatrix::zeros(n, n);
        let one = Complex64::new(1.0, 0.0);
        let base10 = self.d00;
        for i in 0..self.d10 {
            bp.set(base10 + i, base10 + i, one);
        }
        let base11 = self.d00 + self.d10 + self.d01;
        for i in 0..self.d11 {
            bp.set(base11 + i, base11 + i, one);
        }
        let base_e = base11 + self.d11;
        for k in 0..m {
            bp.set(base_e + k, base_e + k, one);
        }
        bp
    }

    /// Canonical block form of the second projection.
    pub fn block_q(&self) -> ComplexMatrix {
        let n = self.ambient_dim();
        let m = self.generic_len();
        let mut bq = ComplexMatrix::zeros(n, n);
        let one = Complex64::new(1.0, 0.0);
        let base01 = self.d00 + self.d10;
        for i in 0..self.d01 {
            bq.set(base01 + i, base01 + i, one);
        }
        let base11 = base01 + self.d01;
        for i in 0..self.d11 {
            bq.set(base11 + i, base11 + i, one);
        }
        let base_e = base11 + self.d11;
        let base_f = base_e + m;
        for k in 0..m {
            let (c, s) = (self.c_diag[k], self.s_diag[k]);
            bq.set(base_e + k, base_e + k, Complex64::new(c * c, 0.0));
            bq.set(base_e + k, base_f + k, Complex64::new(c * s, 0.0));
            bq.set(base_f + k, base_e + k, Complex64::new(c * s, 0.0));
            bq.set(base_f + k, base_f + k, Complex64::new(s * s, 0.0));
        }
        bq
    }
}

/// Compute the canonical decomposition of a pair of projections.
///
/// Classification of the principal cosines uses `rank_rel`: values within
/// `rank_rel` of 0 or 1 are assigned to the corner subspaces, everything
/// strictly between forms the generic part.
pub fn halmos_decompose(
    p: &Projection,
    q: &Projection,
    tol: &Tolerances,
) -> Result<HalmosDecomposition> {
    check_same_dim(p, q)?;
    let n = p.dim();
    let cut = tol.rank_rel;

    let bp = p.range_basis();
    let bq = q.range_basis();

    // Column collections for each canonical subspace.
    let mut h10: Vec<DVector<Complex64>> = Vec::new();
    let mut h01: Vec<DVector<Complex64>> = Vec::new();
    let mut h11: Vec<DVector<Complex64>> = Vec::new();
    let mut gen_e: Vec<DVector<Complex64>> = Vec::new();
    let mut gen_f: Vec<DVector<Complex64>> = Vec::new();
    let mut cosines: Vec<f64> = Vec::new();

    match (&bp, &bq) {
        (Some(bp), Some(bq)) => {
            let a = bp.as_dmatrix().adjoint() * bq.as_dmatrix();
            let svd = a.clone().svd(true, true);
            let x = svd.u.as_ref().expect("svd with u");
            let yt = svd.v_t.as_ref().expect("svd with v_t");
            let k = svd.singular_values.len();
            for i in 0..k {
                let sigma = svd.singular_values[i].clamp(0.0, 1.0);
                let u_i: DVector<Complex64> = bp.as_dmatrix() * x.column(i);
                let v_i: DVector<Complex64> = bq.as_dmatrix() * yt.row(i).adjoint();
                if sigma >= 1.0 - cut {
                    h11.push(u_i);
                } else if sigma <= cut {
                    h10.push(u_i);
                    h01.push(v_i);
                } else {
                    let s = (1.0 - sigma * sigma).sqrt();
                    let f = (&v_i - &u_i * Complex64::new(sigma, 0.0)) / Complex64::new(s, 0.0);
                    gen_e.push(u_i);
                    gen_f.push(f);
                    cosines.push(sigma);
                }
            }
            // Left/right singular vectors beyond the shared count fill out
            // the corners on each side.
            let extra_left = complete_basis(&x.columns(0, k).into_owned(), bp.cols());
            for c in 0..extra_left.ncols() {
                h10.push(bp.as_dmatrix() * extra_left.column(c));
            }
            let y = yt.adjoint();
            let extra_right = complete_basis(&y.columns(0, k).into_owned(), bq.cols());
            for c in 0..extra_right.ncols() {
                h01.push(bq.as_dmatrix() * extra_right.column(c));
            }
        }
        (Some(bp), None) => {
            for c in 0..bp.cols() {
                h10.push(bp.as_dmatrix().column(c).into_owned());
            }
        }
        (None, Some(bq)) => {
            for c in 0..bq.cols() {
                h01.push(bq.as_dmatrix().column(c).into_owned());
            }
        }
        (None, None) => {}
    }

    let (d10, d01, d11, m) = (h10.len(), h01.len(), h11.len(), gen_e.len());
    let known = d10 + d01 + d11 + 2 * m;
    debug_assert!(known <= n);

    // Everything orthogonal to the assembled columns is H00.
    let mut assembled = DMatrix::<Complex64>::zeros(n, known);
    {
        let mut at = 0;
        for col in h10.iter().chain(&h01).chain(&h11).chain(&gen_e).chain(&gen_f) {
            assembled.view_mut((0, at), (n, 1)).copy_from(col);
            at += 1;
        }
    }
    let h00 = complete_basis(&assembled, n);
    let d00 = h00.ncols();

    let mut w = DMatrix::<Complex64>::zeros(n, n);
    let mut at = 0;
    for c in 0..d00 {
        w.view_mut((0, at), (n, 1)).copy_from(&h00.column(c));
        at += 1;
    }
    for col in h10.iter().chain(&h01).chain(&h11).chain(&gen_e).chain(&gen_f) {
        w.view_mut((0, at), (n, 1)).copy_from(col);
        at += 1;
    }

    let angles: Vec<f64> = cosines.iter().map(|&c| c.acos()).collect();
    let s_diag: Vec<f64> = angles.iter().map(|&t| t.sin()).collect();
    Ok(HalmosDecomposition {
        w: ComplexMatrix::from_dmatrix(w),
        d00,
        d10,
        d01,
        d11,
        angles,
        c_diag: cosines,
        s_diag,
    })
}

/// Gap between the first projection and the partial isometry of the
/// polar decomposition of `QP`, together with its closed-form value
/// `2 sin(theta/2)` where `sin(theta) = ||P - Q||`.
pub fn polar_isometry_gap(p: &Projection, q: &Projection, tol: &Tolerances) -> Result<(f64, f64)> {
    check_same_dim(p, q)?;
    let d = spectral_norm(&(p.matrix() - q.matrix()))?;
    if d >= 1.0 - tol.eq_abs {
        return Err(Error::TooFar { distance: d });
    }
    let qp = q.matrix() * p.matrix();
    let (u, _h) = polar_partial_isometry(&qp, tol)?;
    let gap = spectral_norm(&(&u - p.matrix()))?;
    let theta = d.clamp(0.0, 1.0).asin();
    let predicted = 2.0 * (theta / 2.0).sin();
    Ok((gap, predicted))
}

/// Outcome of the two-pair rank-complement comparison.
#[derive(Debug, Clone)]
pub struct RankCheckReport {
    pub rank_p_complement: usize,
    pub rank_q_complement: usize,
    /// The combined partial isometry `U = U1 + U2`.
    pub u: ComplexMatrix,
    /// `||U - (P1 + P2)||`
    pub gap: f64,
    /// Nullity of `U` on `(P1+P2)H` minus the codimension of its range
    /// in `(Q1+Q2)H`; the finite-dimensional index surrogate.
    pub index: i64,
}

/// Compare complement ranks for two pairwise-orthogonal pairs with
/// `||P_i - Q_i|| < 1`.
pub fn rank_complement_check(
    p1: &Projection,
    p2: &Projection,
    q1: &Projection,
    q2: &Projection,
    tol: &Tolerances,
) -> Result<RankCheckReport> {
    check_same_dim(p1, p2)?;
    check_same_dim(p1, q1)?;
    check_same_dim(p1, q2)?;
    let p_prod = spectral_norm(&(p1.matrix() * p2.matrix()))?;
    let q_prod = spectral_norm(&(q1.matrix() * q2.matrix()))?;
    let worst = p_prod.max(q_prod);
    if worst > tol.eq_abs {
        return Err(Error::NotOrthogonal { norm: worst });
    }
    for (p, q) in [(p1, q1), (p2, q2)] {
        let d = spectral_norm(&(p.matrix() - q.matrix()))?;
        if d >= 1.0 - tol.eq_abs {
            return Err(Error::TooFar { distance: d });
        }
    }

    let (u1, _) = polar_partial_isometry(&(q1.matrix() * p1.matrix()), tol)?;
    let (u2, _) = polar_partial_isometry(&(q2.matrix() * p2.matrix()), tol)?;
    let u = &u1 + &u2;

    let p_sum = p1.matrix() + p2.matrix();
    let q_sum = q1.matrix() + q2.matrix();
    let eye = ComplexMatrix::identity(p1.dim());
    let rank_p_complement = rank_tol(&(&eye - &p_sum), tol)?;
    let rank_q_complement = rank_tol(&(&eye - &q_sum), tol)?;

    let gap = spectral_norm(&(&u - &p_sum))?;
    let rank_u = rank_tol(&u, tol)?;
    let nullity = rank_tol(&p_sum, tol)? as i64 - rank_u as i64;
    let codim = rank_tol(&q_sum, tol)? as i64 - rank_u as i64;

    Ok(RankCheckReport { rank_p_complement, rank_q_complement, u, gap, index: nullity - codim })
}

/// Index of the unique chain element within distance `< 1` of `p`, if any.
///
/// The chain must be totally ordered by range inclusion; then at most one
/// element can be closer than one, and finding two signals a numerical
/// breakdown rather than a mathematical possibility.
pub fn nearest_in_chain(
    p: &Projection,
    chain: &[Projection],
    tol: &Tolerances,
) -> Result<Option<usize>> {
    let mut found: Option<usize> = None;
    for (i, el) in chain.iter().enumerate() {
        check_same_dim(p, el)?;
        let d = spectral_norm(&(p.matrix() - el.matrix()))?;
        if d < 1.0 - tol.eq_abs {
            if let Some(first) = found {
                return Err(Error::UniquenessViolated { first, second: i });
            }
            found = Some(i);
        }
    }
    Ok(found)
}

fn check_same_dim(p: &Projection, q: &Projection) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { left: p.dim(), right: q.dim() });
    }
    Ok(())
}
