//! Impulse responses and forecast error variance decompositions.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Responses by horizon: entry `(i, j)` of element `h` is the response of
/// variable `i` to shock `j` after `h` periods.
pub type Responses = Vec<DMatrix<f64>>;

/// Moving-average coefficients `Phi_0 = I`, `Phi_h = sum_l A_l' Phi_{h-l}`
/// of a VAR with `K x N` coefficient matrix `a`, up to `horizon`.
pub fn ma_coefficients(a: &DMatrix<f64>, lags: usize, horizon: usize) -> Responses {
    let n = a.ncols();
    responses_from(a, lags, &DMatrix::identity(n, n), horizon)
}

/// Responses to the columns of `impact` (`Theta_0 = impact`).
pub fn impulse_responses(a: &DMatrix<f64>, lags: usize, impact: &DMatrix<f64>, horizon: usize) -> Responses {
    responses_from(a, lags, impact, horizon)
}

fn responses_from(a: &DMatrix<f64>, lags: usize, impact: &DMatrix<f64>, horizon: usize) -> Responses {
    let n = a.ncols();
    let lag_blocks: Vec<DMatrix<f64>> = (0..lags).map(|l| a.rows(l * n, n).transpose()).collect();
    let mut out: Responses = Vec::with_capacity(horizon + 1);
    out.push(impact.clone());
    for h in 1..=horizon {
        let mut theta = DMatrix::zeros(n, impact.ncols());
        for l in 1..=h.min(lags) {
            theta.gemm(1.0, &lag_blocks[l - 1], &out[h - l], 1.0);
        }
        out.push(theta);
    }
    out
}

/// Forecast error variance shares: element `h` holds the share of variable
/// `i`'s `h`-step variance due to shock `j`. Rows sum to one.
pub fn variance_decomposition(responses: &[DMatrix<f64>]) -> Result<Responses> {
    let Some(first) = responses.first() else {
        return Ok(Vec::new());
    };
    let (n, m) = first.shape();
    let mut cumulative = DMatrix::<f64>::zeros(n, m);
    let mut out = Vec::with_capacity(responses.len());
    for theta in responses {
        cumulative += theta.map(|v| v * v);
        let mut shares = cumulative.clone();
        for i in 0..n {
            let total: f64 = cumulative.row(i).sum();
            if total.is_nan() || total <= 0.0 || !total.is_finite() {
                return Err(Error::ZeroVariance { variable: i + 1 });
            }
            shares.row_mut(i).scale_mut(1.0 / total);
        }
        out.push(shares);
    }
    Ok(out)
}
