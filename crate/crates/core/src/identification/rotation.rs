//! Orthogonal rotations: Haar draws, zero-restricted draws and sign checks.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::identification::restrictions::RestrictionSet;
use crate::linalg::{householder_qr, null_space, standard_normal_matrix, standard_normal_vector};

/// Haar-distributed orthogonal matrix from the QR factorisation of a
/// standard-normal matrix, with the triangular factor's diagonal made positive.
pub fn haar_sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let z = standard_normal_matrix(n, n, rng);
    let (mut q, r) = householder_qr(&z);
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Rows of the unit-impact responses `Phi_h P` that the zero restrictions of
/// `shock` constrain.
pub fn zero_rows(base: &[DMatrix<f64>], restrictions: &RestrictionSet, shock: usize) -> DMatrix<f64> {
    let zeros = restrictions.zeros(shock);
    let n = restrictions.variables();
    let mut f = DMatrix::zeros(zeros.len(), n);
    for (r, &(v, h)) in zeros.iter().enumerate() {
        f.set_row(r, &base[h].row(v));
    }
    f
}

/// Rotation whose columns satisfy every zero restriction exactly, drawn
/// column by column from the unit sphere of the admissible null space.
///
/// `base[h]` must hold `Phi_h P` for every horizon carrying a zero.
pub fn zero_restricted_q<R: Rng + ?Sized>(
    base: &[DMatrix<f64>],
    restrictions: &RestrictionSet,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let n = restrictions.variables();
    let mut q = DMatrix::zeros(n, n);
    let order = restrictions.zero_order();
    for (pos, &j) in order.iter().enumerate() {
        let f = zero_rows(base, restrictions, j);
        let z = f.nrows();
        if z + pos >= n && z > 0 {
            return Err(Error::InfeasibleZeros { shock: j + 1, zeros: z, preceding: pos, n });
        }
        let mut m = DMatrix::zeros(z + pos, n);
        m.rows_mut(0, z).copy_from(&f);
        for (r, &prev) in order[..pos].iter().enumerate() {
            m.set_row(z + r, &q.column(prev).transpose());
        }
        let basis = null_space(&m).ok_or(Error::RankDeficient { shock: j + 1 })?;
        let x = standard_normal_vector(basis.ncols(), rng);
        let col = basis * &x / x.norm();
        q.set_column(j, &col);
    }
    Ok(q)
}

/// Outcome of the sign check for one shock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignOutcome {
    Pass,
    /// Passes once the shock's column is negated.
    PassFlipped,
    Fail,
}

/// Checks the sign codes of `shock` on the responses (`responses[h]` with
/// impact `P Q`) and on row `shock` of the structural matrix `Q' P^-1`.
pub fn check_shock(
    restrictions: &RestrictionSet,
    shock: usize,
    responses: &[DMatrix<f64>],
    structural: Option<&DMatrix<f64>>,
) -> SignOutcome {
    let n = restrictions.variables();
    let holds = |flip: f64| {
        for (h, theta) in responses.iter().enumerate().take(restrictions.horizons()) {
            for v in 0..n {
                if let Some(code) = restrictions.irf(v, shock, h) {
                    if !code.holds(flip * theta[(v, shock)]) {
                        return false;
                    }
                }
            }
        }
        if let Some(s) = structural {
            for v in 0..n {
                if let Some(code) = restrictions.structural(shock, v) {
                    if !code.holds(flip * s[(shock, v)]) {
                        return false;
                    }
                }
            }
        }
        true
    };
    if holds(1.0) {
        SignOutcome::Pass
    } else if holds(-1.0) {
        SignOutcome::PassFlipped
    } else {
        SignOutcome::Fail
    }
}

/// Applies [`check_shock`] to every shock, negating columns of `q` (and the
/// matching response columns and structural rows) where that rescues a
/// shock. Returns false as soon as a shock fails.
pub fn apply_sign_checks(
    restrictions: &RestrictionSet,
    q: &mut DMatrix<f64>,
    responses: &mut [DMatrix<f64>],
    mut structural: Option<&mut DMatrix<f64>>,
) -> bool {
    for j in 0..restrictions.variables() {
        match check_shock(restrictions, j, responses, structural.as_deref()) {
            SignOutcome::Pass => {}
            SignOutcome::PassFlipped => {
                q.column_mut(j).neg_mut();
                for theta in responses.iter_mut() {
                    theta.column_mut(j).neg_mut();
                }
                if let Some(s) = structural.as_deref_mut() {
                    s.row_mut(j).neg_mut();
                }
            }
            SignOutcome::Fail => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identification::restrictions::Sign;
    use crate::linalg::max_abs_diff;
    use crate::rng::{stream, Purpose};

    #[test]
    fn haar_draws_are_orthogonal() {
        let mut rng = stream(1, Purpose::Haar, 0);
        for _ in 0..100 {
            let q = haar_sample(4, &mut rng);
            assert!(max_abs_diff(&(q.transpose() * &q), &DMatrix::identity(4, 4)) < 1e-10);
        }
    }

    #[test]
    fn one_dimensional_haar_is_a_fair_sign() {
        let mut rng = stream(2, Purpose::Haar, 0);
        let positives = (0..10_000).filter(|_| haar_sample(1, &mut rng)[(0, 0)] > 0.0).count();
        assert!((positives as f64 / 10_000.0 - 0.5).abs() < 0.02);
    }

    #[test]
    fn two_dimensional_zero_matches_angle_solution() {
        let p = DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.4, 0.8]);
        let mut r = RestrictionSet::new(2);
        r.set_irf(0, 0, 0, Sign::Zero).unwrap();
        let mut rng = stream(3, Purpose::Rotation, 0);
        for _ in 0..50 {
            let q = zero_restricted_q(std::slice::from_ref(&p), &r, &mut rng).unwrap();
            // First row of P is (1.5, 0); the only unit vectors orthogonal to
            // it are angle +-pi/2, i.e. (0, +-1).
            assert!(q[(0, 0)].abs() < 1e-15 && (q[(1, 0)].abs() - 1.0).abs() < 1e-15);
            assert!(max_abs_diff(&(q.transpose() * &q), &DMatrix::identity(2, 2)) < 1e-12);
            assert!((&p * &q)[(0, 0)].abs() < 1e-12);
        }
    }

    #[test]
    fn zero_on_rotated_row() {
        let p = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.5, 2.0, 0.0, -0.3, 0.7, 1.1]);
        let mut r = RestrictionSet::new(3);
        r.set_irf(1, 2, 0, Sign::Zero).unwrap();
        r.set_irf(2, 2, 0, Sign::Zero).unwrap();
        r.set_irf(0, 1, 0, Sign::Zero).unwrap();
        let mut rng = stream(4, Purpose::Rotation, 0);
        let q = zero_restricted_q(std::slice::from_ref(&p), &r, &mut rng).unwrap();
        let impact = &p * &q;
        assert!(impact[(1, 2)].abs() < 1e-12 && impact[(2, 2)].abs() < 1e-12 && impact[(0, 1)].abs() < 1e-12);
        assert!(max_abs_diff(&(q.transpose() * &q), &DMatrix::identity(3, 3)) < 1e-12);
    }

    #[test]
    fn sign_flip_rules() {
        let mut r = RestrictionSet::new(2);
        r.set_irf(0, 0, 0, Sign::Positive).unwrap();
        let pass = vec![DMatrix::from_row_slice(2, 2, &[3.2, 0.0, 0.0, 1.0])];
        assert_eq!(check_shock(&r, 0, &pass, None), SignOutcome::Pass);
        let flipped = vec![DMatrix::from_row_slice(2, 2, &[-3.2, 0.0, 0.0, 1.0])];
        assert_eq!(check_shock(&r, 0, &flipped, None), SignOutcome::PassFlipped);
        let mut q = DMatrix::identity(2, 2);
        let mut resp = flipped.clone();
        assert!(apply_sign_checks(&r, &mut q, &mut resp, None));
        assert_eq!(q[(0, 0)], -1.0);
        assert_eq!(resp[0][(0, 0)], 3.2);

        r.set_irf(1, 0, 0, Sign::Negative).unwrap();
        let both = vec![DMatrix::from_row_slice(2, 2, &[-3.2, 0.0, -0.5, 1.0])];
        assert_eq!(check_shock(&r, 0, &both, None), SignOutcome::Fail);
    }

    #[test]
    fn structural_codes_are_checked_with_the_column() {
        let mut r = RestrictionSet::new(2);
        r.set_structural(1, 0, Sign::Positive).unwrap();
        r.set_irf(1, 1, 0, Sign::Positive).unwrap();
        let resp = vec![DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, -1.0])];
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -0.2, 1.0]);
        assert_eq!(check_shock(&r, 1, &resp, Some(&s)), SignOutcome::PassFlipped);
        let s_bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.2, 1.0]);
        assert_eq!(check_shock(&r, 1, &resp, Some(&s_bad)), SignOutcome::Fail);
    }
}
