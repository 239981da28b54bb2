//! Posterior summaries over draws.

use crate::error::{Error, Result};

/// Mean, standard deviation and a central interval of one quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Quantile by linear interpolation between order statistics
/// (`h = (n - 1) p`) of already sorted values.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summary with quantiles at `(1 - probability) / 2` and `(1 + probability) / 2`.
/// The standard deviation uses the `n - 1` denominator.
pub fn summarize(values: &[f64], probability: f64) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::EmptyDraws);
    }
    if !(probability > 0.0 && probability < 1.0) {
        return Err(Error::InvalidSetting(format!("probability {probability} must lie in (0, 1)")));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Summary {
        mean,
        sd,
        lower: quantile_sorted(&sorted, (1.0 - probability) / 2.0),
        upper: quantile_sorted(&sorted, (1.0 + probability) / 2.0),
    })
}
