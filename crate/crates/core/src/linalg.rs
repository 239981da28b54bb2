//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Lower Cholesky factor.
pub fn cholesky(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    m.clone().cholesky().map(|c| c.l()).ok_or(Error::NotPositiveDefinite { what })
}

/// `ln |M|` given the lower Cholesky factor of `M`.
pub fn log_det_from_chol(l: &DMatrix<f64>) -> f64 {
    2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Inverse of a symmetric positive-definite matrix through its Cholesky factor.
pub fn spd_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite { what })?;
    Ok(symmetrize(&chol.inverse()))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Solve `L x = b` for lower-triangular `L` (columns of `b` in parallel).
pub fn solve_lower(l: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    l.solve_lower_triangular(b).ok_or(Error::NotPositiveDefinite { what: "triangular factor" })
}

pub fn standard_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    // Column-major fill order is part of the reproducibility contract.
    let mut m = DMatrix::zeros(rows, cols);
    for v in m.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    m
}

pub fn standard_normal_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Householder QR of an `n x r` matrix returning the full `n x n` orthogonal
/// factor and the `n x r` upper-trapezoidal factor, with `a = q * r`.
///
/// Written out rather than taken from nalgebra because the null-space
/// construction needs the complete orthogonal factor, and the finite
/// difference checks need it to vary smoothly with the input.
pub fn householder_qr(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let r_cols = a.ncols();
    let mut r = a.clone();
    let mut q = DMatrix::<f64>::identity(n, n);
    for k in 0..r_cols.min(n.saturating_sub(1)) {
        let x = r.view((k, k), (n - k, 1)).clone_owned();
        let norm = x.norm();
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm2 = v.norm_squared();
        if vnorm2 == 0.0 {
            continue;
        }
        // R <- H R on rows k..n
        for j in k..r_cols {
            let dot: f64 = (0..n - k).map(|i| v[i] * r[(k + i, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in 0..n - k {
                r[(k + i, j)] -= f * v[i];
            }
        }
        // Q <- Q H on columns k..n
        for i in 0..n {
            let dot: f64 = (0..n - k).map(|l| q[(i, k + l)] * v[l]).sum();
            let f = 2.0 * dot / vnorm2;
            for l in 0..n - k {
                q[(i, k + l)] -= f * v[l];
            }
        }
    }
    (q, r)
}

/// Orthonormal basis (as columns) of the null space of the `r x n` matrix `m`,
/// assuming `m` has full row rank. Returns `None` when the rows are dependent.
pub fn null_space(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = m.ncols();
    let r = m.nrows();
    if r == 0 {
        return Some(DMatrix::identity(n, n));
    }
    if r > n {
        return None;
    }
    let (q, rr) = householder_qr(&m.transpose());
    let scale = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..r {
        if rr[(i, i)].abs() <= 1e-12 * scale * (n as f64) {
            return None;
        }
    }
    Some(q.columns(r, n - r).into_owned())
}

/// `ln det(M M')` for a full-row-rank `M`, via QR of `M'`.
pub fn log_gram_det(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let (_, r) = householder_qr(&m.transpose());
    (0..m.nrows()).map(|i| 2.0 * r[(i, i)].abs().ln()).sum()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn householder_reconstructs_and_is_orthogonal() {
        let mut rng = stream(1, Purpose::Haar, 0);
        let a = standard_normal_matrix(5, 3, &mut rng);
        let (q, r) = householder_qr(&a);
        assert!(max_abs_diff(&(&q * &r), &a) < 1e-12);
        assert!(max_abs_diff(&(q.transpose() * &q), &DMatrix::identity(5, 5)) < 1e-12);
        for i in 0..3 {
            for j in 0..i {
                assert!(r[(i, j)].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn null_space_is_orthogonal_to_rows() {
        let mut rng = stream(2, Purpose::Haar, 0);
        let m = standard_normal_matrix(2, 5, &mut rng);
        let basis = null_space(&m).unwrap();
        assert_eq!(basis.ncols(), 3);
        assert!((&m * &basis).abs().max() < 1e-12);
        assert!(max_abs_diff(&(basis.transpose() * &basis), &DMatrix::identity(3, 3)) < 1e-12);
    }

    #[test]
    fn null_space_rejects_dependent_rows() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert!(null_space(&m).is_none());
    }

    #[test]
    fn gram_det_matches_direct() {
        let mut rng = stream(3, Purpose::Haar, 0);
        let m = standard_normal_matrix(3, 6, &mut rng);
        let direct = (&m * m.transpose()).determinant().ln();
        assert!((log_gram_det(&m) - direct).abs() < 1e-10);
    }
}
