//! Distance-one certificates: when two nests are at Hausdorff distance
//! one, produce a unit-norm rank-one witness showing the algebra
//! distance is also one.

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, ComplexMatrix, Tolerances};
use crate::nests::{nest_distance, Nest};
use crate::projections::Projection;

use super::{contains, WitnessSide};

/// Which branch of the argument produced the certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateCase {
    /// Some element of one nest is at distance one from every element of
    /// the other; the witness comes from the largest element whose
    /// co-corner stays small.
    FarElement,
    /// No single far element: the bound is the supremum of `t_i^2` over
    /// close pairs. At finite dimension this branch cannot reach one and
    /// only triggers inside the tolerance band.
    SupremumPairs,
}

/// A unit-norm rank-one witness `zeta eta*`.
#[derive(Debug, Clone)]
pub struct RankOneWitness {
    pub zeta: ComplexMatrix,
    pub eta: ComplexMatrix,
    /// The certified value `||P^perp zeta|| * ||P eta||` for this witness.
    pub achieved: f64,
}

impl RankOneWitness {
    pub fn matrix(&self) -> ComplexMatrix {
        &self.zeta * &self.eta.adjoint()
    }
}

/// Certificate that two nests at distance one have algebra distance one.
#[derive(Debug, Clone)]
pub struct DistanceCertificate {
    /// The threshold `delta = max_N min(||P_M^perp P_N||, ||P_M P_N^perp||)`
    /// of the far-element branch.
    pub delta: Option<f64>,
    /// Index of the largest element with `||P_M^perp P_N|| <= delta`.
    pub n0_index: Option<usize>,
    pub witnesses: Vec<RankOneWitness>,
    /// Best certified lower bound over all witnesses.
    pub achieved: f64,
    pub case: CertificateCase,
    /// Which algebra the witnesses live in.
    pub side: WitnessSide,
}

/// Build a certificate for nests at distance one.
pub fn distance_one_certificate(
    m: &Nest,
    n: &Nest,
    tol: &Tolerances,
) -> Result<DistanceCertificate> {
    let d = nest_distance(m, n)?;
    if d < 1.0 - tol.eq_abs {
        return Err(Error::NotDistanceOne { distance: d });
    }

    let mut best: Option<DistanceCertificate> = None;
    for (side, far_nest, other) in [(WitnessSide::N, m, n), (WitnessSide::M, n, m)] {
        // Far elements: at distance >= 1 from everything on the other side.
        for far in far_nest.elements() {
            let mut min_d = f64::INFINITY;
            for el in other.elements() {
                min_d = min_d.min(spectral_norm(&(far.matrix() - el.matrix()))?);
            }
            if min_d < 1.0 - tol.eq_abs {
                continue;
            }
            let cert = far_element_certificate(far, other, side, tol)?;
            if best.as_ref().map(|b| cert.achieved > b.achieved).unwrap_or(true) {
                best = Some(cert);
            }
        }
    }
    if let Some(cert) = best {
        validate(&cert, m, n, tol)?;
        return Ok(cert);
    }

    // No far element: fall back to the pairwise branch.
    let cert = supremum_pairs_certificate(m, n, tol)?;
    validate(&cert, m, n, tol)?;
    Ok(cert)
}

/// The far-element branch: compute `delta`, locate the largest element
/// `N_0` with a small co-corner, and build the rank-one witness from
/// `P_{N_0+}` and `P_{N_0}^perp`.
fn far_element_certificate(
    far: &Projection,
    other: &Nest,
    side: WitnessSide,
    tol: &Tolerances,
) -> Result<DistanceCertificate> {
    let far_perp = far.complement();
    let mut corner_left = Vec::with_capacity(other.len()); // ||P_M^perp P_N||
    let mut corner_right = Vec::with_capacity(other.len()); // ||P_M P_N^perp||
    for el in other.elements() {
        let el_perp = el.complement();
        corner_left.push(spectral_norm(&(far_perp.matrix() * el.matrix()))?);
        corner_right.push(spectral_norm(&(far.matrix() * el_perp.matrix()))?);
    }
    let delta = corner_left
        .iter()
        .zip(&corner_right)
        .map(|(&l, &r)| l.min(r))
        .fold(0.0f64, f64::max);

    let n0 = if delta >= 1.0 - tol.eq_abs {
        // Both corners reach one at the argmax element; use it directly.
        corner_left
            .iter()
            .zip(&corner_right)
            .position(|(&l, &r)| l.min(r) >= delta - tol.eq_abs)
            .expect("argmax exists")
    } else {
        // Largest element whose left corner stays at or below delta; the
        // left corners are nondecreasing along the nest.
        let slack = delta * 1e-12 + 1e-14;
        (0..other.len())
            .rev()
            .find(|&k| corner_left[k] <= delta + slack)
            .ok_or_else(|| Error::InvariantViolation("no element below the delta threshold".into()))?
    };
    if n0 + 1 >= other.len() {
        return Err(Error::InvariantViolation(
            "delta threshold reached the top of the nest".into(),
        ));
    }

    let succ = &other.elements()[n0 + 1];
    let n0_perp = other.elements()[n0].complement();
    let (s1, zeta) = unit_maximizer(&(far_perp.matrix() * succ.matrix()), succ)?;
    let (s2, eta) = unit_maximizer(&(far.matrix() * n0_perp.matrix()), &n0_perp)?;
    let achieved = s1 * s2;
    Ok(DistanceCertificate {
        delta: Some(delta),
        n0_index: Some(n0),
        witnesses: vec![RankOneWitness { zeta, eta, achieved }],
        achieved,
        case: CertificateCase::FarElement,
        side,
    })
}

/// The pairwise branch: best rank-one witness over all close pairs.
fn supremum_pairs_certificate(
    m: &Nest,
    n: &Nest,
    tol: &Tolerances,
) -> Result<DistanceCertificate> {
    let mut best: Option<(f64, RankOneWitness, WitnessSide)> = None;
    for (side, mm, nn) in [(WitnessSide::N, m, n), (WitnessSide::M, n, m)] {
        for el_m in mm.elements() {
            let m_perp = el_m.complement();
            for b in 0..nn.len() - 1 {
                let n_perp = nn.elements()[b].complement();
                let succ = &nn.elements()[b + 1];
                let (s1, zeta) = unit_maximizer(&(m_perp.matrix() * succ.matrix()), succ)?;
                let (s2, eta) = unit_maximizer(&(el_m.matrix() * n_perp.matrix()), &n_perp)?;
                let achieved = s1 * s2;
                if best.as_ref().map(|(v, _, _)| achieved > *v).unwrap_or(true) {
                    best = Some((achieved, RankOneWitness { zeta, eta, achieved }, side));
                }
            }
        }
    }
    let (achieved, witness, side) =
        best.ok_or_else(|| Error::InvariantViolation("no pairs to scan".into()))?;
    let _ = tol;
    Ok(DistanceCertificate {
        delta: None,
        n0_index: None,
        witnesses: vec![witness],
        achieved,
        case: CertificateCase::SupremumPairs,
        side,
    })
}

/// Unit vector in the range of `space` maximizing `||B v||`.
fn unit_maximizer(b: &ComplexMatrix, space: &Projection) -> Result<(f64, ComplexMatrix)> {
    let svd = b.as_dmatrix().clone().svd(false, true);
    let sigma = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if sigma > 1e-300 {
        let vt = svd.v_t.as_ref().expect("svd with v_t");
        return Ok((sigma, ComplexMatrix::from_dmatrix(vt.rows(0, 1).adjoint())));
    }
    let basis = space
        .range_basis()
        .ok_or_else(|| Error::InvariantViolation("witness space has rank zero".into()))?;
    Ok((sigma, basis.column(0)))
}

fn validate(cert: &DistanceCertificate, m: &Nest, n: &Nest, tol: &Tolerances) -> Result<()> {
    let own = match cert.side {
        WitnessSide::M => m,
        WitnessSide::N => n,
    };
    if cert.achieved > 1.0 + tol.eq_abs {
        return Err(Error::InvariantViolation(format!(
            "certified value {} exceeds one",
            cert.achieved
        )));
    }
    for w in &cert.witnesses {
        let t = w.matrix();
        let norm = spectral_norm(&t)?;
        if (norm - 1.0).abs() > tol.eq_abs {
            return Err(Error::InvariantViolation(format!("witness norm {norm} is not one")));
        }
        let (member, residual) = contains(&t, own, tol)?;
        if !member {
            return Err(Error::InvariantViolation(format!(
                "witness leaves its algebra (residual {residual:.3e})"
            )));
        }
    }
    Ok(())
}
