//! Seeded generators for matrices, projections, nests, and structured
//! test families. Everything is deterministic in the seed so property
//! suites and reports are reproducible.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{orthonormalize, spectral_norm, ComplexMatrix, Tolerances};
use crate::nest_algebra::upper_triangular_part;
use crate::nests::{nest_from_flag, Nest};
use crate::projections::{projection_from_basis, Projection};

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream derived from a base seed; streams never overlap.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Matrix with entries uniform in the complex unit square.
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
    })
}

/// Unitary from orthonormalizing a random square matrix; retries in the
/// measure-zero event of a rank-deficient draw.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    loop {
        if let Ok(q) = orthonormalize(&random_matrix(rng, n, n)) {
            return q;
        }
    }
}

/// Random projection of the given rank.
pub fn random_projection(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> Projection {
    if rank == 0 {
        return Projection::zero(dim);
    }
    if rank == dim {
        return Projection::identity(dim);
    }
    let u = random_unitary(rng, dim);
    projection_from_basis(&u.leading_columns(rank), &Tolerances::default())
        .expect("orthonormal columns")
}

/// Unconditioned pair: independent ranks, independent orientations.
pub fn random_projection_pair(rng: &mut ChaCha8Rng, dim: usize) -> (Projection, Projection) {
    let r1 = rng.random_range(0..=dim);
    let r2 = rng.random_range(0..=dim);
    (random_projection(rng, dim, r1), random_projection(rng, dim, r2))
}

/// Pair at guaranteed distance below one: the second projection spans
/// `G B` for `G = I + strength R` with `strength <= max_strength < 1/2`.
pub fn random_close_projection_pair(
    rng: &mut ChaCha8Rng,
    dim: usize,
    max_strength: f64,
) -> (Projection, Projection) {
    let rank = rng.random_range(1..dim.max(2));
    let p = random_projection(rng, dim, rank);
    let strength = rng.random::<f64>() * max_strength;
    let q = perturb_projection(rng, &p, strength);
    (p, q)
}

/// Projection onto `(I + strength R) range(P)` with `||strength R|| = strength`.
pub fn perturb_projection(rng: &mut ChaCha8Rng, p: &Projection, strength: f64) -> Projection {
    let basis = match p.range_basis() {
        Some(b) => b,
        None => return p.clone(),
    };
    let g = random_contraction_shift(rng, p.dim(), strength);
    projection_from_basis(&(&g * &basis), &Tolerances::default()).expect("invertible image")
}

/// `I + strength R` with `R` random of unit spectral norm.
pub fn random_contraction_shift(rng: &mut ChaCha8Rng, dim: usize, strength: f64) -> ComplexMatrix {
    let r = random_matrix(rng, dim, dim);
    let norm = spectral_norm(&r).expect("finite");
    if norm == 0.0 || strength == 0.0 {
        return ComplexMatrix::identity(dim);
    }
    &ComplexMatrix::identity(dim) + &r.scale(Complex64::new(strength / norm, 0.0))
}

/// Random nest: random strictly increasing flag signature, Haar-ish basis.
pub fn random_nest(rng: &mut ChaCha8Rng, dim: usize) -> Nest {
    let mut dims = vec![0usize];
    for k in 1..dim {
        if rng.random::<f64>() < 0.5 {
            dims.push(k);
        }
    }
    dims.push(dim);
    let basis = random_unitary(rng, dim);
    nest_from_flag(&dims, &basis, &Tolerances::default()).expect("valid flag")
}

/// Random nest with at least one interior element.
pub fn random_nontrivial_nest(rng: &mut ChaCha8Rng, dim: usize) -> Nest {
    loop {
        let n = random_nest(rng, dim);
        if n.len() > 2 {
            return n;
        }
    }
}

/// Two pairwise-orthogonal pairs `(P1, P2)` and `(Q1, Q2)` with
/// `||P_i - Q_i|| < 1`, obtained by jointly shifting the spans.
pub fn random_orthogonal_quadruple(
    rng: &mut ChaCha8Rng,
    dim: usize,
    strength: f64,
) -> (Projection, Projection, Projection, Projection) {
    let r1 = rng.random_range(1..dim);
    let r2 = rng.random_range(1..=(dim - r1));
    let u = random_unitary(rng, dim);
    let b1 = u.leading_columns(r1);
    let b12 = u.leading_columns(r1 + r2);
    let tol = Tolerances::default();
    let p1 = projection_from_basis(&b1, &tol).expect("orthonormal");
    let mut p2_basis_cols: Vec<ComplexMatrix> = Vec::new();
    for c in r1..r1 + r2 {
        p2_basis_cols.push(u.column(c));
    }
    let refs: Vec<&ComplexMatrix> = p2_basis_cols.iter().collect();
    let p2 = projection_from_basis(&ComplexMatrix::hcat(&refs).expect("columns"), &tol)
        .expect("orthonormal");

    // One invertible shift applied to the joint flag keeps Q1 and Q2
    // exactly orthogonal while staying close to P1 and P2.
    let g = random_contraction_shift(rng, dim, strength);
    let joint = orthonormalize(&(&g * &b12)).expect("invertible image");
    let q1 = projection_from_basis(&joint.leading_columns(r1), &tol).expect("orthonormal");
    let mut q2_cols: Vec<ComplexMatrix> = Vec::new();
    for c in r1..r1 + r2 {
        q2_cols.push(joint.column(c));
    }
    let refs2: Vec<&ComplexMatrix> = q2_cols.iter().collect();
    let q2 = projection_from_basis(&ComplexMatrix::hcat(&refs2).expect("columns"), &tol)
        .expect("orthonormal");
    (p1, p2, q1, q2)
}

/// Nest pairs at Hausdorff distance exactly one, drawn from three
/// structured families and conjugated by a common random unitary.
pub fn random_distance_one_pair(rng: &mut ChaCha8Rng, dim: usize) -> (Nest, Nest) {
    assert!(dim >= 2);
    let tol = Tolerances::default();
    let w = random_unitary(rng, dim);
    let variant = if dim >= 3 { rng.random_range(0..3) } else { 0 };
    let shift_basis = |offset: usize| -> ComplexMatrix {
        // columns e_{offset}, e_{offset+1}, ... cyclically
        ComplexMatrix::from_fn(dim, dim, |i, j| {
            if i == (j + offset) % dim {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    };
    let (m, n) = match variant {
        0 => {
            // middle elements span orthogonal coordinate planes
            let k = rng.random_range(1..dim);
            let m = nest_from_flag(&[0, k, dim], &(&w * &shift_basis(0)), &tol).unwrap();
            let n = nest_from_flag(&[0, k, dim], &(&w * &shift_basis(k)), &tol).unwrap();
            (m, n)
        }
        1 => {
            // same directions, jumped rank: containment forces distance one
            let k = rng.random_range(1..dim - 1);
            let m = nest_from_flag(&[0, k, dim], &w, &tol).unwrap();
            let n = nest_from_flag(&[0, k + 1, dim], &w, &tol).unwrap();
            (m, n)
        }
        _ => {
            // longer flags shifted by one coordinate
            let m = nest_from_flag(&[0, 1, 2, dim], &(&w * &shift_basis(0)), &tol).unwrap();
            let n = nest_from_flag(&[0, 1, 2, dim], &(&w * &shift_basis(1)), &tol).unwrap();
            (m, n)
        }
    };
    (m, n)
}

/// Random member of the nest algebra with unit spectral norm.
pub fn random_algebra_member(rng: &mut ChaCha8Rng, nest: &Nest) -> ComplexMatrix {
    let raw = random_matrix(rng, nest.dim(), nest.dim());
    let member = upper_triangular_part(&raw, nest).expect("pattern projection");
    let norm = spectral_norm(&member).expect("finite");
    if norm > 0.0 {
        member.scale(Complex64::new(1.0 / norm, 0.0))
    } else {
        member
    }
}
