//! Importance weights that correct for the zero-restricted rotation draws.
//!
//! Draws built by [`zero_restricted_q`](super::rotation::zero_restricted_q)
//! are not uniform on the set of structural parameters satisfying the
//! zeros. The weight below is proportional to the ratio of the target
//! density to the proposal density on that set; only ratios across draws
//! with the same restrictions matter.

use nalgebra::{DMatrix, DVector};

use crate::analysis::irf::ma_coefficients;
use crate::data::companion;
use crate::error::{Error, Result};
use crate::identification::restrictions::RestrictionSet;
use crate::identification::rotation::zero_rows;
use crate::linalg::{cholesky, householder_qr, log_det_from_chol, log_gram_det, null_space};

/// Log weight in closed form, up to a constant shared by all draws:
///
/// `0.5 ln det(C C') - 0.5 sum_j ln det(F_j (I - Q_<j Q_<j') F_j')`
///
/// where `C` stacks the gradients of the zero-restricted responses with
/// respect to the structural coefficients, `F_j` are the unit-impact
/// response rows constrained for shock `j`, and `Q_<j` the columns drawn
/// before it. Returns 0 when there are no zeros.
pub fn log_zero_weight(
    a: &DMatrix<f64>,
    lags: usize,
    chol: &DMatrix<f64>,
    q: &DMatrix<f64>,
    restrictions: &RestrictionSet,
) -> Result<f64> {
    let Some(hz) = restrictions.max_zero_horizon() else {
        return Ok(0.0);
    };
    let n = a.ncols();
    let k = a.nrows();
    let np = n * lags;
    let phi = ma_coefficients(a, lags, hz);
    let impact = chol * q;
    let (cm, _) = companion(a, lags)?;

    let mut rows: Vec<DVector<f64>> = Vec::new();
    for j in 0..n {
        for (v, h) in restrictions.zeros(j) {
            let beta = impact.column(j).into_owned();
            let phi_row = phi[h].row(v).transpose();
            let alpha = impact.transpose() * &phi_row;
            let mut gamma = DMatrix::zeros(k, n);
            let mut s = DVector::zeros(np);
            s.rows_mut(0, n).copy_from(&beta);
            for step in (0..h).rev() {
                let weight = phi[step].row(v);
                let mut block = gamma.rows_mut(0, np);
                block.ger(1.0, &s, &weight.transpose(), 1.0);
                s = &cm * s;
            }
            let grad_a0 = -(&beta * alpha.transpose()) - a.transpose() * &gamma * &impact;
            let grad_ap = &gamma * &impact;
            let mut row = DVector::zeros(n * n + k * n);
            row.rows_mut(0, n * n).copy_from_slice(grad_a0.as_slice());
            row.rows_mut(n * n, k * n).copy_from_slice(grad_ap.as_slice());
            rows.push(row);
        }
    }
    let c = DMatrix::from_fn(rows.len(), n * n + k * n, |r, col| rows[r][col]);
    let mut log_w = 0.5 * log_gram_det(&c);

    let base: Vec<DMatrix<f64>> = phi.iter().map(|m| m * chol).collect();
    let order = restrictions.zero_order();
    for (pos, &j) in order.iter().enumerate() {
        let f = zero_rows(&base, restrictions, j);
        if f.nrows() == 0 {
            continue;
        }
        let mut proj = DMatrix::<f64>::identity(n, n);
        for &prev in &order[..pos] {
            let col = q.column(prev);
            proj -= col * col.transpose();
        }
        let g = &f * proj * f.transpose();
        log_w -= 0.5 * log_det_from_chol(&cholesky(&g, "projected zero-restriction rows")?);
    }
    Ok(log_w)
}

/// Structural coefficients `(A0, A+)` stacked as one vector.
fn pack(a0: &DMatrix<f64>, ap: &DMatrix<f64>) -> DVector<f64> {
    let mut u = DVector::zeros(a0.len() + ap.len());
    u.rows_mut(0, a0.len()).copy_from_slice(a0.as_slice());
    u.rows_mut(a0.len(), ap.len()).copy_from_slice(ap.as_slice());
    u
}

struct Reduced {
    b: DMatrix<f64>,
    sigma: DMatrix<f64>,
    chol: DMatrix<f64>,
    q: DMatrix<f64>,
    impact: DMatrix<f64>,
}

fn reduced(u: &DVector<f64>, n: usize, k: usize) -> Result<Reduced> {
    let a0 = DMatrix::from_column_slice(n, n, &u.as_slice()[..n * n]);
    let ap = DMatrix::from_column_slice(k, n, &u.as_slice()[n * n..]);
    let a0_inv = a0.clone().try_inverse().ok_or(Error::NotPositiveDefinite { what: "structural matrix" })?;
    let b = &ap * &a0_inv;
    let sigma = a0_inv.transpose() * &a0_inv;
    let chol = cholesky(&sigma, "error covariance")?;
    let q = chol.transpose() * &a0;
    Ok(Reduced { b, sigma, chol, q, impact: a0_inv.transpose() })
}

/// Orthonormal basis of the null space of `m` obtained by projecting
/// `reference` onto it and orthonormalising with a positive triangular factor.
fn continue_basis(m: &DMatrix<f64>, reference: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let projected = if m.nrows() == 0 {
        reference.clone()
    } else {
        let gram = (m * m.transpose()).cholesky().ok_or(Error::NotPositiveDefinite { what: "constraint rows" })?;
        reference - m.transpose() * gram.solve(&(m * reference))
    };
    let d = projected.ncols();
    let (q, r) = householder_qr(&projected);
    let mut basis = q.columns(0, d).into_owned();
    for c in 0..d {
        if r[(c, c)] < 0.0 {
            basis.column_mut(c).neg_mut();
        }
    }
    Ok(basis)
}

fn central_jacobian<F>(f: F, u: &DVector<f64>, directions: &DMatrix<f64>, step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut cols = Vec::with_capacity(directions.ncols());
    for c in 0..directions.ncols() {
        let d = directions.column(c) * step;
        cols.push((f(&(u + &d))? - f(&(u - &d))?) / (2.0 * step));
    }
    let rows = cols.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r]))
}

/// Log weight from the volume element of the map from structural
/// coefficients restricted to the zero set to the sampler's coordinates
/// (reduced-form coefficients, error covariance and the unit-sphere draws
/// in each null space), obtained by central finite differences along an
/// orthonormal tangent basis of the zero set:
///
/// `-(2N + K + 1) ln |det A0| - 0.5 ln det(J'J)`.
///
/// Much slower than [`log_zero_weight`]; meant for validation.
pub fn log_zero_weight_numerical(
    a: &DMatrix<f64>,
    lags: usize,
    sigma: &DMatrix<f64>,
    q: &DMatrix<f64>,
    restrictions: &RestrictionSet,
    step: f64,
) -> Result<f64> {
    let Some(hz) = restrictions.max_zero_horizon() else {
        return Ok(0.0);
    };
    let n = a.ncols();
    let k = a.nrows();
    let chol = cholesky(sigma, "error covariance")?;
    let a0 =
        chol.transpose().solve_upper_triangular(q).ok_or(Error::NotPositiveDefinite { what: "error covariance" })?;
    let ap = a * &a0;
    let u = pack(&a0, &ap);
    let dim = u.len();
    let order = restrictions.zero_order();

    let constraints = |u: &DVector<f64>| -> Result<DVector<f64>> {
        let r = reduced(u, n, k)?;
        let phi = ma_coefficients(&r.b, lags, hz);
        let mut out = Vec::new();
        for j in 0..n {
            for (v, h) in restrictions.zeros(j) {
                out.push((&phi[h] * &r.impact)[(v, j)]);
            }
        }
        Ok(DVector::from_vec(out))
    };
    let constrained_rows = |r: &Reduced, pos: usize, j: usize| -> DMatrix<f64> {
        let base: Vec<DMatrix<f64>> = ma_coefficients(&r.b, lags, hz).iter().map(|m| m * &r.chol).collect();
        let f = zero_rows(&base, restrictions, j);
        let z = f.nrows();
        let mut m = DMatrix::zeros(z + pos, n);
        m.rows_mut(0, z).copy_from(&f);
        for (row, &prev) in order[..pos].iter().enumerate() {
            m.set_row(z + row, &r.q.column(prev).transpose());
        }
        m
    };
    // Null-space bases at the draw itself; nearby points use their smooth
    // continuation rather than a fresh factorisation, whose sign choices can
    // jump.
    let at_draw = reduced(&u, n, k)?;
    let references = order
        .iter()
        .enumerate()
        .map(|(pos, &j)| null_space(&constrained_rows(&at_draw, pos, j)).ok_or(Error::RankDeficient { shock: j + 1 }))
        .collect::<Result<Vec<_>>>()?;
    let coordinates = |u: &DVector<f64>| -> Result<DVector<f64>> {
        let r = reduced(u, n, k)?;
        let mut out: Vec<f64> = r.b.as_slice().to_vec();
        for j in 0..n {
            for i in j..n {
                out.push(r.sigma[(i, j)]);
            }
        }
        for (pos, &j) in order.iter().enumerate() {
            let basis = continue_basis(&constrained_rows(&r, pos, j), &references[pos])?;
            out.extend((basis.transpose() * r.q.column(j)).iter());
        }
        Ok(DVector::from_vec(out))
    };

    let jc = central_jacobian(constraints, &u, &DMatrix::identity(dim, dim), step)?;
    let tangent = null_space(&jc).ok_or(Error::RankDeficient { shock: 0 })?;
    let jg = central_jacobian(coordinates, &u, &tangent, step)?;
    let log_volume = 0.5 * log_gram_det(&jg.transpose());
    let exponent = (2 * n + k + 1) as f64;
    Ok(-exponent * a0.determinant().abs().ln() - log_volume)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identification::restrictions::Sign;
    use crate::identification::rotation::zero_restricted_q;
    use crate::linalg::standard_normal_matrix;
    use crate::rng::{stream, Purpose};

    fn random_case(
        n: usize,
        lags: usize,
        restrictions: &RestrictionSet,
        index: u64,
    ) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let mut rng = stream(77, Purpose::Haar, index);
        let k = n * lags + 1;
        let a = standard_normal_matrix(k, n, &mut rng) * 0.3;
        let g = standard_normal_matrix(n, n, &mut rng);
        let sigma = &g * g.transpose() + DMatrix::identity(n, n) * 0.5;
        let chol = cholesky(&sigma, "test").unwrap();
        let hz = restrictions.max_zero_horizon().unwrap();
        let base: Vec<_> = ma_coefficients(&a, lags, hz).iter().map(|m| m * &chol).collect();
        let q = zero_restricted_q(&base, restrictions, &mut rng).unwrap();
        (a, sigma, q)
    }

    fn check_proportional(n: usize, lags: usize, restrictions: &RestrictionSet) {
        let mut closed = Vec::new();
        let mut numeric = Vec::new();
        for i in 0..6 {
            let (a, sigma, q) = random_case(n, lags, restrictions, i);
            let chol = cholesky(&sigma, "test").unwrap();
            closed.push(log_zero_weight(&a, lags, &chol, &q, restrictions).unwrap());
            numeric.push(log_zero_weight_numerical(&a, lags, &sigma, &q, restrictions, 1e-5).unwrap());
        }
        let offset = closed[0] - numeric[0];
        for i in 1..closed.len() {
            let rel = ((closed[i] - numeric[i]) - offset).exp() - 1.0;
            assert!(rel.abs() < 1e-3, "draw {i}: relative gap {rel}");
        }
    }

    #[test]
    fn single_impact_zero_weight_is_impact_norm() {
        let mut r = RestrictionSet::new(2);
        r.set_irf(0, 0, 0, Sign::Zero).unwrap();
        let (a, sigma, q) = random_case(2, 1, &r, 0);
        let chol = cholesky(&sigma, "test").unwrap();
        let w = log_zero_weight(&a, 1, &chol, &q, &r).unwrap();
        assert!((w - (&chol * q.column(0)).norm().ln()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_finite_differences_two_variables() {
        let mut r = RestrictionSet::new(2);
        r.set_irf(0, 0, 0, Sign::Zero).unwrap();
        check_proportional(2, 1, &r);
        let mut later = RestrictionSet::new(2);
        later.set_irf(1, 1, 2, Sign::Zero).unwrap();
        check_proportional(2, 2, &later);
    }

    #[test]
    fn closed_form_matches_finite_differences_three_variables() {
        let mut r = RestrictionSet::new(3);
        r.set_irf(0, 0, 0, Sign::Zero).unwrap();
        r.set_irf(1, 0, 1, Sign::Zero).unwrap();
        r.set_irf(2, 1, 0, Sign::Zero).unwrap();
        check_proportional(3, 1, &r);
        let mut single = RestrictionSet::new(3);
        single.set_irf(2, 2, 1, Sign::Zero).unwrap();
        check_proportional(3, 2, &single);
        let mut impact = RestrictionSet::new(3);
        impact.set_irf(0, 0, 0, Sign::Zero).unwrap();
        check_proportional(3, 2, &impact);
    }

    #[test]
    fn weight_ignores_column_signs() {
        let mut r = RestrictionSet::new(3);
        r.set_irf(0, 0, 0, Sign::Zero).unwrap();
        r.set_irf(1, 1, 1, Sign::Zero).unwrap();
        let (a, sigma, mut q) = random_case(3, 1, &r, 3);
        let chol = cholesky(&sigma, "test").unwrap();
        let w = log_zero_weight(&a, 1, &chol, &q, &r).unwrap();
        q.column_mut(1).neg_mut();
        q.column_mut(0).neg_mut();
        assert!((log_zero_weight(&a, 1, &chol, &q, &r).unwrap() - w).abs() < 1e-10);
    }
}
