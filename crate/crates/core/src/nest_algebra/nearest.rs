//! Nearest algebra element by a sweep of one-block norm-minimizing
//! completions.
//!
//! In the adapted frame the task is: find `R` agreeing with `T` on the
//! strictly lower blocks, free elsewhere, of minimal spectral norm; the
//! nearest element is then `T - R`. The free blocks are filled one at a
//! time, bottom block-row first and left to right within a row. Filling
//! block `(i, j)` is a single completion problem on the submatrix
//! `rows i.., cols ..=j` whose fixed parts were already forced below the
//! target level by the previous steps, so the sweep meets the corner
//! maximum exactly.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, ComplexMatrix, Tolerances};
use crate::nests::Nest;

use super::{arveson_distance, AdaptedFrame};

/// Element of the nest algebra at minimal spectral distance from `t`.
///
/// The returned operator satisfies `contains` and realizes the distance
/// formula: `||t - A||` equals the corner maximum up to `eq_abs`.
pub fn nearest_element(t: &ComplexMatrix, n: &Nest, tol: &Tolerances) -> Result<ComplexMatrix> {
    if !t.is_square() || t.rows() != n.dim() {
        return Err(Error::DimensionMismatch { left: t.rows(), right: n.dim() });
    }
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    let frame = AdaptedFrame::new(n)?;
    if frame.block_count() <= 1 {
        return Ok(t.clone()); // trivial nest: the algebra is everything
    }
    let tt = frame.to_frame(t);

    // Corner maximum computed on the frame matrix itself so that the
    // feasibility levels below are exact for the data being completed.
    let mut corner_max = 0.0f64;
    for b in 1..frame.block_count() {
        let off = frame.offsets[b];
        let corner = view(&tt, off, 0, n.dim() - off, off);
        corner_max = corner_max.max(dmatrix_norm(&corner));
    }

    // Slightly inflated levels; retried with larger margins if roundoff
    // in a near-saturated completion leaks above the target.
    for margin in [1e-12, 1e-10, 5e-9] {
        let level = corner_max * (1.0 + margin) + f64::MIN_POSITIVE;
        let residual = sweep(&tt, &frame, level);
        let achieved = dmatrix_norm(&residual);
        if achieved <= corner_max + 0.5 * tol.eq_abs {
            let a = frame.from_frame(&ComplexMatrix::from_dmatrix(&tt.as_dmatrix().clone() - residual));
            // Cross-check against the projection-based distance.
            let (d, _) = arveson_distance(t, n)?;
            let err = spectral_norm(&(t - &a))?;
            if err <= d + tol.eq_abs {
                return Ok(a);
            }
        }
    }
    Err(Error::InvariantViolation(
        "completion sweep failed to reach the corner maximum".into(),
    ))
}

fn view(m: &ComplexMatrix, r0: usize, c0: usize, rows: usize, cols: usize) -> DMatrix<Complex64> {
    m.as_dmatrix().view((r0, c0), (rows, cols)).into_owned()
}

fn dmatrix_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max)
}

/// Fill the free (block upper-triangular) region of the residual at the
/// given level; the fixed region is copied from `tt`.
fn sweep(tt: &ComplexMatrix, frame: &AdaptedFrame, level: f64) -> DMatrix<Complex64> {
    let n = tt.rows();
    let kk = frame.block_count();
    let offs = &frame.offsets;
    let mut r = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..kk {
        for row in offs[i]..offs[i + 1] {
            for col in 0..offs[i] {
                r[(row, col)] = tt.get(row, col);
            }
        }
    }
    for i in (0..kk).rev() {
        for j in i..kk {
            let rows_i = frame.sizes[i];
            let cols_j = frame.sizes[j];
            let w = offs[j]; // width of the fixed-left region
            let below = n - offs[i + 1];
            let a = r.view((offs[i], 0), (rows_i, w)).into_owned();
            let c = r.view((offs[i + 1], 0), (below, w)).into_owned();
            let d = r.view((offs[i + 1], offs[j]), (below, cols_j)).into_owned();
            let x = fill_block(&a, &c, &d, level, rows_i, cols_j);
            r.view_mut((offs[i], offs[j]), (rows_i, cols_j)).copy_from(&x);
        }
    }
    r
}

/// One completion step: choose `X` so that `[[A, X], [C, D]]` stays at or
/// below the level. The choice `X = -A (t^2 I - C* C)^{-1} C* D` works
/// exactly when `||[A; C]|| <= t` and `||[C D]|| <= t`, which the sweep
/// order guarantees.
fn fill_block(
    a: &DMatrix<Complex64>,
    c: &DMatrix<Complex64>,
    d: &DMatrix<Complex64>,
    level: f64,
    rows: usize,
    cols: usize,
) -> DMatrix<Complex64> {
    if a.ncols() == 0 || c.nrows() == 0 {
        return DMatrix::zeros(rows, cols);
    }
    // (t^2 I - C*C)^{-1} through the SVD of C, with a floor that keeps a
    // saturated singular value from amplifying roundoff: feasibility
    // forces the coupling C*D to vanish along such directions.
    let svd = c.clone().svd(false, true);
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let v = vt.adjoint();
    let k = svd.singular_values.len();
    let w = a.ncols();
    let mut diag = DMatrix::<Complex64>::zeros(k, k);
    let t2 = level * level;
    for i in 0..k {
        let s2 = svd.singular_values[i] * svd.singular_values[i];
        diag[(i, i)] = Complex64::new(1.0 / (t2 - s2).max(t2 * 1e-13), 0.0);
    }
    let inv = &v * diag * v.adjoint()
        + (DMatrix::identity(w, w) - &v * v.adjoint()) / Complex64::new(t2, 0.0);
    -(a * inv * c.adjoint() * d)
}
