//! Fitted values, conditional standard deviations and forecasts.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::analysis::irf::ma_coefficients;
use crate::data::DesignMatrices;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, standard_normal_matrix, standard_normal_vector};
use crate::posterior::ReducedFormDraw;
use crate::rng::{stream, Purpose};

/// Access to the reduced form of a draw, structural or not.
pub trait AsReduced {
    fn reduced(&self) -> &ReducedFormDraw;
}

impl AsReduced for ReducedFormDraw {
    fn reduced(&self) -> &ReducedFormDraw {
        self
    }
}

/// `X A` plus, unless `mean_only`, a fresh `N(0, Sigma)` error per period.
pub fn fitted_values<R: Rng + ?Sized>(
    draw: &ReducedFormDraw,
    design: &DesignMatrices,
    mean_only: bool,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let mean = &design.x * &draw.a;
    if mean_only {
        return Ok(mean);
    }
    let l = cholesky(&draw.sigma, "error covariance")?;
    let z = standard_normal_matrix(design.variables(), design.observations(), rng);
    Ok(mean + (l * z).transpose())
}

pub fn fitted_draws<D: AsReduced + Sync>(
    draws: &[D],
    design: &DesignMatrices,
    mean_only: bool,
    seed: u64,
) -> Result<Vec<DMatrix<f64>>> {
    draws
        .par_iter()
        .enumerate()
        .map(|(s, d)| fitted_values(d.reduced(), design, mean_only, &mut stream(seed, Purpose::Fitted, s as u64)))
        .collect()
}

/// Square roots of the error variances, the same in every period.
pub fn conditional_sd(sigma: &DMatrix<f64>) -> DVector<f64> {
    sigma.diagonal().map(f64::sqrt)
}

fn advance(x: &mut DVector<f64>, y: &DVector<f64>) {
    let n = y.len();
    let k = x.len();
    for i in (n..k - 1).rev() {
        x[i] = x[i - n];
    }
    x.rows_mut(0, n).copy_from(y);
}

/// Paths implied by reduced-form innovations, one period per row of `eta`.
fn roll_forward(draw: &ReducedFormDraw, design: &DesignMatrices, eta: &DMatrix<f64>) -> DMatrix<f64> {
    let horizon = eta.nrows();
    let mut x = design.next_regressors();
    let mut out = DMatrix::zeros(horizon, design.variables());
    for h in 0..horizon {
        let y = draw.a.tr_mul(&x) + eta.row(h).transpose();
        out.set_row(h, &y.transpose());
        advance(&mut x, &y);
    }
    out
}

/// One simulated path of `horizon` periods after the sample.
pub fn forecast_path<R: Rng + ?Sized>(
    draw: &ReducedFormDraw,
    design: &DesignMatrices,
    horizon: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if horizon == 0 {
        return Err(Error::InvalidSetting("forecast horizon must be at least 1".into()));
    }
    let l = cholesky(&draw.sigma, "error covariance")?;
    let n = design.variables();
    let mut eta = DMatrix::zeros(horizon, n);
    for h in 0..horizon {
        eta.set_row(h, &(&l * standard_normal_vector(n, rng)).transpose());
    }
    Ok(roll_forward(draw, design, &eta))
}

/// Simulated future paths, one `horizon x N` matrix per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastDraws {
    pub paths: Vec<DMatrix<f64>>,
}

pub fn forecast<D: AsReduced + Sync>(
    draws: &[D],
    design: &DesignMatrices,
    horizon: usize,
    seed: u64,
) -> Result<ForecastDraws> {
    let paths = draws
        .par_iter()
        .enumerate()
        .map(|(s, d)| forecast_path(d.reduced(), design, horizon, &mut stream(seed, Purpose::Forecast, s as u64)))
        .collect::<Result<_>>()?;
    Ok(ForecastDraws { paths })
}

/// Hard condition `y[variable] = value` at `step` periods after the sample
/// (`step` counts from 1, `variable` from 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub variable: usize,
    pub step: usize,
    pub value: f64,
}

/// A path drawn from the predictive distribution conditional on the
/// conditions, by exact Gaussian conditioning of the stacked innovations.
pub fn conditional_forecast_path<R: Rng + ?Sized>(
    draw: &ReducedFormDraw,
    design: &DesignMatrices,
    horizon: usize,
    conditions: &[Condition],
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let n = design.variables();
    validate_conditions(conditions, n, horizon)?;
    let l = cholesky(&draw.sigma, "error covariance")?;
    let dim = n * horizon;
    let mut eta0 = DVector::zeros(dim);
    for h in 0..horizon {
        eta0.rows_mut(h * n, n).copy_from(&(&l * standard_normal_vector(n, rng)));
    }
    if conditions.is_empty() {
        return Ok(roll_forward(draw, design, &unstack(&eta0, horizon, n)));
    }
    let mean_path = roll_forward(draw, design, &DMatrix::zeros(horizon, n));
    let phi = ma_coefficients(&draw.a, design.lags, horizon - 1);
    let c = conditions.len();
    let mut r = DMatrix::zeros(c, dim);
    let mut target = DVector::zeros(c);
    for (row, cond) in conditions.iter().enumerate() {
        let h = cond.step;
        for k in 1..=h {
            for i in 0..n {
                r[(row, (k - 1) * n + i)] = phi[h - k][(cond.variable, i)];
            }
        }
        target[row] = cond.value - mean_path[(h - 1, cond.variable)];
    }
    let mut cov = DMatrix::zeros(dim, dim);
    for h in 0..horizon {
        cov.view_mut((h * n, h * n), (n, n)).copy_from(&draw.sigma);
    }
    let cov_rt = &cov * r.transpose();
    let gram = &r * &cov_rt;
    let chol = gram.cholesky().ok_or_else(|| Error::InvalidCondition("conditions are linearly dependent".into()))?;
    let eta = &eta0 + cov_rt * chol.solve(&(target - &r * &eta0));
    Ok(roll_forward(draw, design, &unstack(&eta, horizon, n)))
}

fn unstack(v: &DVector<f64>, horizon: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(horizon, n, |h, i| v[h * n + i])
}

fn validate_conditions(conditions: &[Condition], n: usize, horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidSetting("forecast horizon must be at least 1".into()));
    }
    let mut seen = BTreeSet::new();
    for c in conditions {
        if c.variable >= n {
            return Err(Error::InvalidCondition(format!("variable {} out of range 1..={n}", c.variable + 1)));
        }
        if c.step == 0 || c.step > horizon {
            return Err(Error::InvalidCondition(format!("horizon {} out of range 1..={horizon}", c.step)));
        }
        if !c.value.is_finite() {
            return Err(Error::InvalidCondition(format!("value {} is not finite", c.value)));
        }
        if !seen.insert((c.variable, c.step)) {
            return Err(Error::InvalidCondition(format!(
                "duplicate condition on variable {} at horizon {}",
                c.variable + 1,
                c.step
            )));
        }
    }
    Ok(())
}

pub fn conditional_forecast<D: AsReduced + Sync>(
    draws: &[D],
    design: &DesignMatrices,
    horizon: usize,
    conditions: &[Condition],
    seed: u64,
) -> Result<ForecastDraws> {
    validate_conditions(conditions, design.variables(), horizon)?;
    let paths = draws
        .par_iter()
        .enumerate()
        .map(|(s, d)| {
            let mut rng = stream(seed, Purpose::Forecast, s as u64);
            conditional_forecast_path(d.reduced(), design, horizon, conditions, &mut rng)
        })
        .collect::<Result<_>>()?;
    Ok(ForecastDraws { paths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_design, TimeSeries};
    use crate::linalg::max_abs_diff;

    fn setup() -> (ReducedFormDraw, DesignMatrices) {
        let v = DMatrix::from_row_slice(6, 2, &[1.0, 0.2, 1.1, 0.1, 0.9, 0.3, 1.3, 0.2, 1.2, 0.0, 1.0, 0.4]);
        let design = build_design(&TimeSeries::from_values(v).unwrap(), 2).unwrap();
        let a = DMatrix::from_row_slice(5, 2, &[0.5, 0.1, 0.2, 0.3, 0.1, 0.0, 0.0, 0.1, 0.3, -0.2]);
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        (ReducedFormDraw { a, sigma }, design)
    }

    #[test]
    fn conditional_sd_is_root_diagonal() {
        let s = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 9.0]);
        assert_eq!(conditional_sd(&s), DVector::from_column_slice(&[2.0, 3.0]));
    }

    #[test]
    fn noiseless_fitted_values_are_the_mean() {
        let (mut draw, design) = setup();
        draw.sigma *= 1e-12;
        let mut rng = stream(1, Purpose::Fitted, 0);
        let noisy = fitted_values(&draw, &design, false, &mut rng).unwrap();
        let mean = fitted_values(&draw, &design, true, &mut rng).unwrap();
        assert_eq!(noisy.shape(), (4, 2));
        assert!(max_abs_diff(&noisy, &(&design.x * &draw.a)) < 1e-4);
        assert_eq!(mean, &design.x * &draw.a);
    }

    #[test]
    fn zero_innovation_path_follows_the_recursion() {
        let (draw, design) = setup();
        let path = roll_forward(&draw, &design, &DMatrix::zeros(3, 2));
        let x1 = design.next_regressors();
        let y1 = draw.a.tr_mul(&x1);
        assert!((path.row(0).transpose() - &y1).norm() < 1e-14);
        let mut x2 = DVector::zeros(5);
        x2.rows_mut(0, 2).copy_from(&y1);
        x2.rows_mut(2, 2).copy_from(&x1.rows(0, 2));
        x2[4] = 1.0;
        assert!((path.row(1).transpose() - draw.a.tr_mul(&x2)).norm() < 1e-14);
    }

    #[test]
    fn fully_conditioned_paths_hit_every_value() {
        let (draw, design) = setup();
        let mut conds = Vec::new();
        for step in 1..=3 {
            for variable in 0..2 {
                conds.push(Condition { variable, step, value: step as f64 - variable as f64 * 0.5 });
            }
        }
        let mut rng = stream(2, Purpose::Forecast, 0);
        let path = conditional_forecast_path(&draw, &design, 3, &conds, &mut rng).unwrap();
        for c in &conds {
            assert!((path[(c.step - 1, c.variable)] - c.value).abs() < 1e-10);
        }
    }

    #[test]
    fn duplicate_and_out_of_range_conditions_fail() {
        let (draw, design) = setup();
        let mut rng = stream(2, Purpose::Forecast, 0);
        let dup = [Condition { variable: 0, step: 1, value: 1.0 }, Condition { variable: 0, step: 1, value: 2.0 }];
        assert!(matches!(
            conditional_forecast_path(&draw, &design, 2, &dup, &mut rng),
            Err(Error::InvalidCondition(_))
        ));
        let far = [Condition { variable: 0, step: 3, value: 1.0 }];
        assert!(conditional_forecast_path(&draw, &design, 2, &far, &mut rng).is_err());
        let var = [Condition { variable: 2, step: 1, value: 1.0 }];
        assert!(conditional_forecast_path(&draw, &design, 2, &var, &mut rng).is_err());
    }

    #[test]
    fn conditioning_a_later_step_leaves_the_first_free() {
        let design =
            build_design(&TimeSeries::from_values(DMatrix::from_column_slice(3, 1, &[0.1, 0.2, 0.3])).unwrap(), 1)
                .unwrap();
        let draw = ReducedFormDraw { a: DMatrix::zeros(2, 1), sigma: DMatrix::identity(1, 1) };
        let conds = [Condition { variable: 0, step: 2, value: 1.5 }];
        let count = 20_000;
        let mut first = Vec::with_capacity(count);
        for s in 0..count {
            let mut rng = stream(3, Purpose::Forecast, s as u64);
            let p = conditional_forecast_path(&draw, &design, 2, &conds, &mut rng).unwrap();
            assert!((p[(1, 0)] - 1.5).abs() < 1e-12);
            first.push(p[(0, 0)]);
        }
        let mean = first.iter().sum::<f64>() / count as f64;
        let var = first.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        assert!(mean.abs() < 3.0 / (count as f64).sqrt());
        assert!((var - 1.0).abs() < 0.04);
    }

    #[test]
    fn one_step_mean_is_the_point_forecast() {
        let (draw, design) = setup();
        let draws = vec![draw.clone(); 20_000];
        let fc = forecast(&draws, &design, 1, 4).unwrap();
        let expected = draw.a.tr_mul(&design.next_regressors());
        for i in 0..2 {
            let vals: Vec<f64> = fc.paths.iter().map(|p| p[(0, i)]).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let se = (draw.sigma[(i, i)] / vals.len() as f64).sqrt();
            assert!((mean - expected[i]).abs() < 3.0 * se);
        }
        assert_eq!(fc, forecast(&draws, &design, 1, 4).unwrap());
    }

    #[test]
    fn unconditional_and_empty_conditional_share_moments() {
        let (draw, design) = setup();
        let draws = vec![draw; 20_000];
        let a = forecast(&draws, &design, 3, 5).unwrap();
        let b = conditional_forecast(&draws, &design, 3, &[], 6).unwrap();
        for h in 0..3 {
            for i in 0..2 {
                let m = |f: &ForecastDraws| {
                    let v: Vec<f64> = f.paths.iter().map(|p| p[(h, i)]).collect();
                    let mean = v.iter().sum::<f64>() / v.len() as f64;
                    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
                    (mean, var)
                };
                let (m1, v1) = m(&a);
                let (m2, v2) = m(&b);
                let se = ((v1 + v2) / 20_000.0).sqrt();
                assert!((m1 - m2).abs() < 3.0 * se);
                assert!((v1 / v2 - 1.0).abs() < 0.06);
            }
        }
    }
}
