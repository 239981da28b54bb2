//! Effective sample size and resampling.

use rand::Rng;

use crate::error::{Error, Result};

/// `(sum w)^2 / sum w^2`.
pub fn ess(weights: &[f64]) -> Result<f64> {
    let sum: f64 = weights.iter().sum();
    let sq: f64 = weights.iter().map(|w| w * w).sum();
    if sum.is_nan() || sum <= 0.0 || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::ZeroWeights);
    }
    Ok(sum * sum / sq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResampleMethod {
    /// One uniform per equal-width stratum of the cumulative weights.
    #[default]
    Stratified,
    /// Independent draws proportional to the weights.
    Multinomial,
}

/// Indices of `count` items drawn proportionally to `weights`.
pub fn resample_indices<R: Rng + ?Sized>(
    weights: &[f64],
    count: usize,
    method: ResampleMethod,
    rng: &mut R,
) -> Result<Vec<usize>> {
    ess(weights)?;
    let total: f64 = weights.iter().sum();
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w / total;
        cumulative.push(acc);
    }
    let mut points: Vec<f64> = match method {
        ResampleMethod::Stratified => (0..count).map(|i| (i as f64 + rng.random::<f64>()) / count as f64).collect(),
        ResampleMethod::Multinomial => (0..count).map(|_| rng.random::<f64>()).collect(),
    };
    if method == ResampleMethod::Multinomial {
        points.sort_by(f64::total_cmp);
    }
    let last_positive = weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
    let mut out = Vec::with_capacity(count);
    let mut i = 0;
    for u in points {
        while i < last_positive && cumulative[i] <= u {
            i += 1;
        }
        out.push(i);
    }
    Ok(out)
}
