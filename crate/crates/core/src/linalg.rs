//! Dense complex linear-algebra kernel: spectral norms, singular values,
//! polar decomposition, tolerant rank, and orthonormalization.
//!
//! Everything downstream manipulates operators through [`ComplexMatrix`],
//! a dense row-major complex matrix backed by `nalgebra`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix with double-precision entries.
///
/// The wrapper owns the invariants the rest of the crate relies on:
/// strictly positive shape and finite entries for anything built through
/// the checked constructors.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<Complex64>,
}

/// Numerical tolerances used throughout the crate.
///
/// `rank_rel` is the relative singular-value cutoff for rank decisions,
/// `eq_abs` the absolute slack for equality comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rank_rel: f64,
    pub eq_abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rank_rel: 1e-8, eq_abs: 1e-8 }
    }
}

impl Tolerances {
    /// Validated constructor: both tolerances strictly positive and below 1e-2.
    pub fn new(rank_rel: f64, eq_abs: f64) -> Result<Self> {
        let ok = |v: f64| v > 0.0 && v < 1e-2 && v.is_finite();
        if !ok(rank_rel) || !ok(eq_abs) {
            return Err(Error::BadTolerances {
                reason: format!("rank_rel={rank_rel}, eq_abs={eq_abs}; both must lie in (0, 1e-2)"),
            });
        }
        Ok(Tolerances { rank_rel, eq_abs })
    }

    /// Default tolerances with `eq_abs` replaced.
    pub fn with_eq_abs(eq_abs: f64) -> Result<Self> {
        Tolerances::new(Tolerances::default().rank_rel, eq_abs)
    }
}

impl ComplexMatrix {
    /// Build from row-major entries, validating shape and finiteness.
    pub fn from_rows(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::BadShape { rows, cols, got: entries.len() });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ComplexMatrix { inner: DMatrix::from_row_slice(rows, cols, &entries) })
    }

    /// Build from real row-major entries.
    pub fn from_real_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::from_rows(rows, cols, entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Build entrywise from a closure.
    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        ComplexMatrix { inner: DMatrix::from_fn(rows, cols, f) }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { inner: DMatrix::zeros(rows, cols) }
    }

    pub fn identity(n: usize) -> Self {
        ComplexMatrix { inner: DMatrix::identity(n, n) }
    }

    /// Column vector from a slice of entries.
    pub fn column_vector(entries: &[Complex64]) -> Self {
        ComplexMatrix { inner: DMatrix::from_column_slice(entries.len(), 1, entries) }
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.inner[(i, j)] = value;
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        ComplexMatrix { inner: self.inner.adjoint() }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ComplexMatrix { inner: &self.inner * s }
    }

    /// Row-major iteration over entries.
    pub fn entries_row_major(&self) -> impl Iterator<Item = Complex64> + '_ {
        let cols = self.cols();
        (0..self.rows()).flat_map(move |i| (0..cols).map(move |j| self.inner[(i, j)]))
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Columns `0..k` as a new matrix. `k` must be in `1..=cols`.
    pub fn leading_columns(&self, k: usize) -> Self {
        ComplexMatrix { inner: self.inner.columns(0, k).into_owned() }
    }

    /// Single column as an n-by-1 matrix.
    pub fn column(&self, j: usize) -> Self {
        ComplexMatrix { inner: self.inner.columns(j, 1).into_owned() }
    }

    /// Horizontal concatenation. All parts must share the row count.
    pub fn hcat(parts: &[&ComplexMatrix]) -> Result<Self> {
        let rows = parts.first().map(|m| m.rows()).unwrap_or(0);
        let cols: usize = parts.iter().map(|m| m.cols()).sum();
        if rows == 0 || cols == 0 {
            return Err(Error::BadShape { rows, cols, got: 0 });
        }
        let mut out = DMatrix::zeros(rows, cols);
        let mut at = 0;
        for part in parts {
            if part.rows() != rows {
                return Err(Error::DimensionMismatch { left: rows, right: part.rows() });
            }
            out.view_mut((0, at), (rows, part.cols())).copy_from(&part.inner);
            at += part.cols();
        }
        Ok(ComplexMatrix { inner: out })
    }

    pub(crate) fn as_dmatrix(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub(crate) fn from_dmatrix(inner: DMatrix<Complex64>) -> Self {
        ComplexMatrix { inner }
    }
}

impl std::ops::Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner + &rhs.inner }
    }
}

impl std::ops::Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner - &rhs.inner }
    }
}

impl std::ops::Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner * &rhs.inner }
    }
}

impl std::ops::Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix { inner: -&self.inner }
    }
}

fn require_finite(a: &ComplexMatrix) -> Result<()> {
    if a.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Largest singular value.
pub fn spectral_norm(a: &ComplexMatrix) -> Result<f64> {
    require_finite(a)?;
    let sv = a.inner.clone().svd(false, false).singular_values;
    Ok(sv.iter().cloned().fold(0.0, f64::max))
}

/// Singular values in descending order.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    require_finite(a)?;
    Ok(a.inner.clone().svd(false, false).singular_values.iter().cloned().collect())
}

/// Count of singular values above the relative cutoff `rank_rel * sigma_max`.
pub fn rank_tol(a: &ComplexMatrix, tol: &Tolerances) -> Result<usize> {
    let sv = singular_values(a)?;
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    if sigma_max == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tol.rank_rel * sigma_max).count())
}

/// Polar decomposition `a = u * h` with `h = (a* a)^{1/2}` positive
/// semidefinite and `u` the partial isometry with initial space
/// `range(a*)` and final space `range(a)`.
///
/// `u` is assembled from the singular triples above the relative cutoff,
/// so `u u* u = u` holds to machine precision even for singular `a`.
pub fn polar_partial_isometry(
    a: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    require_finite(a)?;
    let svd = a.inner.clone().svd(true, true);
    let u_fac = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let k = svd.singular_values.len();
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = tol.rank_rel * sigma_max;

    let mut u = DMatrix::<Complex64>::zeros(a.rows(), a.cols());
    let mut h = DMatrix::<Complex64>::zeros(a.cols(), a.cols());
    for i in 0..k {
        let s = svd.singular_values[i];
        let vi = v_t.rows(i, 1).adjoint(); // i-th right singular vector
        h += &vi * vi.adjoint() * Complex64::new(s, 0.0);
        if s > cutoff && s > 0.0 {
            let ui = u_fac.columns(i, 1).into_owned();
            u += ui * vi.adjoint();
        }
    }
    Ok((ComplexMatrix { inner: u }, ComplexMatrix { inner: h }))
}

/// Orthonormalize the columns by a thin QR factorization.
///
/// The span of the first `j` output columns equals the span of the first
/// `j` input columns for every `j`, which is what flag construction
/// relies on. Fails with `RankDeficient` when the columns are dependent
/// at the default rank tolerance.
pub fn orthonormalize(cols: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_finite(cols)?;
    if cols.cols() > cols.rows() {
        return Err(Error::RankDeficient);
    }
    if rank_tol(cols, &Tolerances::default())? < cols.cols() {
        return Err(Error::RankDeficient);
    }
    let qr = cols.inner.clone().qr();
    Ok(ComplexMatrix { inner: qr.q() })
}

/// Extend orthonormal columns to an orthonormal basis of the ambient
/// space. Returns only the added columns; `u` may have zero columns.
pub(crate) fn complete_basis(u: &DMatrix<Complex64>, dim: usize) -> DMatrix<Complex64> {
    use nalgebra::DVector;
    debug_assert!(u.nrows() == dim && u.ncols() <= dim);
    let missing = dim - u.ncols();
    let mut added: Vec<DVector<Complex64>> = Vec::with_capacity(missing);
    while added.len() < missing {
        // Residual of each standard basis vector against everything
        // collected so far; greedily take the largest.
        let mut best: Option<(f64, DVector<Complex64>)> = None;
        for j in 0..dim {
            let mut e = DVector::<Complex64>::zeros(dim);
            e[j] = Complex64::new(1.0, 0.0);
            let r = residual(&e, u, &added);
            let norm = r.norm();
            if best.as_ref().map(|(b, _)| norm > *b).unwrap_or(true) {
                best = Some((norm, r));
            }
        }
        let (norm, r) = best.expect("dim >= 1");
        let r = r / Complex64::new(norm, 0.0);
        // One reorthogonalization pass keeps the basis clean.
        let r = residual(&r, u, &added);
        let r = &r / Complex64::new(r.norm(), 0.0);
        added.push(r);
    }
    DMatrix::from_fn(dim, missing, |i, c| added[c][i])
}

fn residual(
    v: &nalgebra::DVector<Complex64>,
    u: &DMatrix<Complex64>,
    added: &[nalgebra::DVector<Complex64>],
) -> nalgebra::DVector<Complex64> {
    let mut r = v.clone();
    if u.ncols() > 0 {
        r -= u * (u.adjoint() * v);
    }
    for col in added {
        let coeff = col.dotc(&r);
        r -= col * coeff;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Power iteration on a* a; independent of the SVD path.
    fn power_iteration_norm(a: &ComplexMatrix, iters: usize) -> f64 {
        let ata = &a.adjoint() * a;
        let n = ata.cols();
        let mut v = ComplexMatrix::from_fn(n, 1, |i, _| c(1.0 / (i as f64 + 1.0), 0.2 * i as f64));
        let mut lambda = 0.0;
        for _ in 0..iters {
            let w = &ata * &v;
            let norm = w.entries_row_major().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            lambda = norm;
            v = w.scale(c(1.0 / norm, 0.0));
        }
        lambda.sqrt()
    }

    #[test]
    fn spectral_norm_zero_matrix() {
        let z = ComplexMatrix::zeros(3, 3);
        assert_eq!(spectral_norm(&z).unwrap(), 0.0);
    }

    #[test]
    fn spectral_norm_nilpotent() {
        let a = ComplexMatrix::from_real_rows(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((spectral_norm(&a).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_norm_matches_power_iteration() {
        let mut seed = 1u64;
        let mut next = move || {
            // xorshift; only used to build a fixed 6x6 input
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed % 1000) as f64 / 500.0 - 1.0
        };
        let a = ComplexMatrix::from_fn(6, 6, |_, _| c(next(), next()));
        let by_svd = spectral_norm(&a).unwrap();
        let by_power = power_iteration_norm(&a, 4000);
        assert!((by_svd - by_power).abs() < 1e-10, "{by_svd} vs {by_power}");
    }

    #[test]
    fn spectral_norm_of_adjoint_agrees() {
        let a = ComplexMatrix::from_rows(
            3,
            2,
            vec![c(1.0, 2.0), c(0.0, -1.0), c(3.0, 0.5), c(0.0, 0.0), c(-2.0, 1.0), c(0.7, 0.7)],
        )
        .unwrap();
        let lhs = spectral_norm(&a).unwrap();
        let rhs = spectral_norm(&a.adjoint()).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn non_finite_entries_rejected() {
        assert!(matches!(
            ComplexMatrix::from_rows(1, 1, vec![c(f64::NAN, 0.0)]),
            Err(Error::NonFinite)
        ));
        let mut a = ComplexMatrix::zeros(2, 2);
        a.set(0, 0, c(f64::INFINITY, 0.0));
        assert!(matches!(spectral_norm(&a), Err(Error::NonFinite)));
    }

    #[test]
    fn polar_invertible_gives_unitary() {
        let a = ComplexMatrix::from_rows(2, 2, vec![c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0), c(1.0, 0.0)])
            .unwrap();
        let (u, h) = polar_partial_isometry(&a, &Tolerances::default()).unwrap();
        let uu = &u.adjoint() * &u;
        let eye = ComplexMatrix::identity(2);
        assert!(spectral_norm(&(&uu - &eye)).unwrap() < 1e-10);
        assert!(spectral_norm(&(&a - &(&u * &h))).unwrap() < 1e-12);
    }

    #[test]
    fn polar_zero_matrix() {
        let z = ComplexMatrix::zeros(3, 3);
        let (u, h) = polar_partial_isometry(&z, &Tolerances::default()).unwrap();
        assert_eq!(spectral_norm(&u).unwrap(), 0.0);
        assert_eq!(spectral_norm(&h).unwrap(), 0.0);
    }

    #[test]
    fn polar_partial_isometry_identity() {
        // u u* u = u for a rank-deficient rectangular-feeling input
        let a = ComplexMatrix::from_real_rows(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0])
            .unwrap();
        let (u, h) = polar_partial_isometry(&a, &Tolerances::default()).unwrap();
        let uuu = &(&u * &u.adjoint()) * &u;
        assert!(spectral_norm(&(&uuu - &u)).unwrap() < 1e-12);
        assert!(spectral_norm(&(&a - &(&u * &h))).unwrap() < 1e-12);
    }

    #[test]
    fn rank_tol_basics() {
        let tol = Tolerances::default();
        assert_eq!(rank_tol(&ComplexMatrix::identity(4), &tol).unwrap(), 4);
        assert_eq!(rank_tol(&ComplexMatrix::zeros(3, 5), &tol).unwrap(), 0);
        // outer product of nonzero vectors has rank one
        let zeta = ComplexMatrix::column_vector(&[c(1.0, 0.5), c(-2.0, 0.0), c(0.0, 3.0)]);
        let eta = ComplexMatrix::column_vector(&[c(0.0, 1.0), c(4.0, 0.0)]);
        let outer = &zeta * &eta.adjoint();
        assert_eq!(rank_tol(&outer, &tol).unwrap(), 1);
    }

    #[test]
    fn orthonormalize_preserves_span_and_gram() {
        let v = ComplexMatrix::from_real_rows(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        let q = orthonormalize(&v).unwrap();
        let gram = &q.adjoint() * &q;
        assert!(spectral_norm(&(&gram - &ComplexMatrix::identity(2))).unwrap() < 1e-10);
        // same span: projection onto q-columns reproduces v
        let p = &q * &q.adjoint();
        assert!(spectral_norm(&(&(&p * &v) - &v)).unwrap() < 1e-10);
        // hand Gram-Schmidt of [(1,0),(1,1)]: first column e1, second e2
        assert!((q.get(0, 0).norm() - 1.0).abs() < 1e-12);
        assert!((q.get(1, 1).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthonormalize_idempotent_on_orthonormal_input() {
        let v = ComplexMatrix::from_real_rows(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let q = orthonormalize(&v).unwrap();
        let gram = &q.adjoint() * &q;
        assert!(spectral_norm(&(&gram - &ComplexMatrix::identity(2))).unwrap() < 1e-10);
        let p_in = &v * &v.adjoint();
        let p_out = &q * &q.adjoint();
        assert!(spectral_norm(&(&p_in - &p_out)).unwrap() < 1e-12);
    }

    #[test]
    fn orthonormalize_rejects_dependent_columns() {
        let v = ComplexMatrix::from_real_rows(2, 2, &[1.0, 2.0, 0.0, 0.0]).unwrap();
        assert!(matches!(orthonormalize(&v), Err(Error::RankDeficient)));
    }

    #[test]
    fn rank_of_orthonormalized_equals_column_count() {
        let v = ComplexMatrix::from_rows(
            4,
            3,
            vec![
                c(1.0, 0.0), c(1.0, 1.0), c(0.0, 0.0),
                c(0.0, 1.0), c(2.0, 0.0), c(1.0, 0.0),
                c(0.0, 0.0), c(0.0, 1.0), c(1.0, -1.0),
                c(0.5, 0.0), c(0.0, 0.0), c(2.0, 0.0),
            ],
        )
        .unwrap();
        let q = orthonormalize(&v).unwrap();
        assert_eq!(rank_tol(&q, &Tolerances::default()).unwrap(), 3);
    }

    #[test]
    fn tolerances_validation() {
        assert!(Tolerances::new(1e-8, 1e-8).is_ok());
        assert!(Tolerances::new(0.0, 1e-8).is_err());
        assert!(Tolerances::new(1e-8, 0.5).is_err());
        assert!(Tolerances::new(-1e-8, 1e-8).is_err());
    }

    #[test]
    fn complete_basis_spans_everything() {
        let u = orthonormalize(
            &ComplexMatrix::from_rows(3, 1, vec![c(1.0, 0.0), c(1.0, 1.0), c(0.0, -1.0)]).unwrap(),
        )
        .unwrap();
        let added = complete_basis(u.as_dmatrix(), 3);
        let full = ComplexMatrix::hcat(&[&u, &ComplexMatrix::from_dmatrix(added)]).unwrap();
        let gram = &full.adjoint() * &full;
        assert!(spectral_norm(&(&gram - &ComplexMatrix::identity(3))).unwrap() < 1e-12);
    }
}
