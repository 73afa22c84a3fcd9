//! The exact two-dimensional family separating nest distance from
//! algebra distance: nests at distance `s < 1` whose algebras are at
//! distance one.

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, ComplexMatrix, Tolerances};
use crate::nests::{nest_distance, nest_from_flag, Nest};

use super::{arveson_distance, contains};

/// One member of the family: the two nests, the norm-one witness
/// `T = [[a, 1-a^2], [0, -a]]` with `a = c/s`, and the verified values.
#[derive(Debug, Clone)]
pub struct CounterexampleInstance {
    pub s: f64,
    pub c: f64,
    pub a: f64,
    pub m_nest: Nest,
    pub n_nest: Nest,
    pub t: ComplexMatrix,
    pub nest_dist: f64,
    pub alg_dist_lb: f64,
}

/// Build and verify the family member for `s` in `[1/sqrt(2), 1)`.
///
/// Below `1/sqrt(2)` the choice `a = c/s` would exceed one and the
/// witness would leave the unit ball, so such `s` are rejected.
pub fn counterexample_family(s: f64, tol: &Tolerances) -> Result<CounterexampleInstance> {
    let lo = std::f64::consts::FRAC_1_SQRT_2 - tol.eq_abs;
    if !(lo..1.0).contains(&s) {
        return Err(Error::OutOfRange {
            reason: format!("s = {s} outside [1/sqrt(2), 1)"),
        });
    }
    let c = (1.0 - s * s).sqrt();
    let a = (c / s).min(1.0);

    let m_nest = nest_from_flag(&[0, 1, 2], &ComplexMatrix::identity(2), tol)?;
    let n_basis = ComplexMatrix::from_real_rows(2, 2, &[c, -s, s, c])?;
    let n_nest = nest_from_flag(&[0, 1, 2], &n_basis, tol)?;

    let t = ComplexMatrix::from_real_rows(2, 2, &[a, 1.0 - a * a, 0.0, -a])?;

    // The verified claims: ||T|| = 1 (characteristic-polynomial identity),
    // T in the first algebra, d(M, N) = s, d(T, T(N)) = 2acs + (1-a^2)s^2 = 1.
    let t_norm = spectral_norm(&t)?;
    if (t_norm - 1.0).abs() > tol.eq_abs {
        return Err(Error::InvariantViolation(format!("witness norm {t_norm} is not one")));
    }
    let (member, residual) = contains(&t, &m_nest, tol)?;
    if !member {
        return Err(Error::InvariantViolation(format!(
            "witness leaves its algebra (residual {residual:.3e})"
        )));
    }
    let nest_dist = nest_distance(&m_nest, &n_nest)?;
    if (nest_dist - s).abs() > tol.eq_abs {
        return Err(Error::InvariantViolation(format!(
            "nest distance {nest_dist} differs from s = {s}"
        )));
    }
    let (alg_dist_lb, _) = arveson_distance(&t, &n_nest)?;
    let closed_form = 2.0 * a * c * s + (1.0 - a * a) * s * s;
    if (alg_dist_lb - closed_form).abs() > tol.eq_abs || (alg_dist_lb - 1.0).abs() > tol.eq_abs {
        return Err(Error::InvariantViolation(format!(
            "algebra distance {alg_dist_lb} differs from the closed form {closed_form}"
        )));
    }

    Ok(CounterexampleInstance { s, c, a, m_nest, n_nest, t, nest_dist, alg_dist_lb })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn boundary_value_gives_diagonal_witness() {
        let inst = counterexample_family(std::f64::consts::FRAC_1_SQRT_2, &tol()).unwrap();
        assert!((inst.a - 1.0).abs() < 1e-12);
        let expected = ComplexMatrix::from_real_rows(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(spectral_norm(&(&inst.t - &expected)).unwrap() < 1e-12);
        assert!((inst.nest_dist - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
        assert!((inst.alg_dist_lb - 1.0).abs() < 1e-10);
    }

    #[test]
    fn four_fifths_instance_matches_hand_arithmetic() {
        let inst = counterexample_family(0.8, &tol()).unwrap();
        assert!((inst.c - 0.6).abs() < 1e-12);
        assert!((inst.a - 0.75).abs() < 1e-12);
        assert!((inst.nest_dist - 0.8).abs() < 1e-12);
        // 2 * 0.75 * 0.6 * 0.8 + 0.4375 * 0.64 = 1
        assert!((inst.alg_dist_lb - 1.0).abs() < 1e-12);
    }

    #[test]
    fn below_range_is_rejected() {
        assert!(matches!(counterexample_family(0.5, &tol()), Err(Error::OutOfRange { .. })));
        assert!(matches!(counterexample_family(1.0, &tol()), Err(Error::OutOfRange { .. })));
    }
}
