//! Structural shocks and historical decompositions.

use nalgebra::DMatrix;

use crate::analysis::irf::impulse_responses;
use crate::data::DesignMatrices;
use crate::error::{Error, Result};
use crate::identification::StructuralDraw;
use crate::linalg::solve_lower;

/// Reduced-form residuals `Y - X A`.
pub fn residuals(a: &DMatrix<f64>, design: &DesignMatrices) -> Result<DMatrix<f64>> {
    if a.nrows() != design.regressors() || a.ncols() != design.variables() {
        return Err(Error::Shape(format!(
            "coefficients are {}x{} but the design has {} regressors and {} variables",
            a.nrows(),
            a.ncols(),
            design.regressors(),
            design.variables()
        )));
    }
    Ok(&design.y - &design.x * a)
}

/// Structural shocks `e_t = Q' P^-1 u_t`, one period per row.
pub fn structural_shocks(draw: &StructuralDraw, design: &DesignMatrices) -> Result<DMatrix<f64>> {
    let u = residuals(&draw.reduced.a, design)?;
    shocks_from_residuals(&draw.chol, &draw.q, &u)
}

pub fn shocks_from_residuals(chol: &DMatrix<f64>, q: &DMatrix<f64>, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let whitened = solve_lower(chol, &u.transpose())?;
    Ok(whitened.transpose() * q)
}

/// Shock contributions and the part of the data they do not explain.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoricalDecomposition {
    /// Element `t` holds the contribution of shock `j` to variable `i` in
    /// period `t` of the effective sample at entry `(i, j)`.
    pub contributions: Vec<DMatrix<f64>>,
    /// Initial conditions and deterministic terms, one period per row.
    pub remainder: DMatrix<f64>,
}

/// Contributions `H(i, j, t) = sum_{s <= t} Theta_s(i, j) e_{t-s}(j)`, with
/// accumulation starting at the first effective period.
pub fn historical_decomposition(
    draw: &StructuralDraw,
    design: &DesignMatrices,
    shocks: &DMatrix<f64>,
) -> Result<HistoricalDecomposition> {
    let t_eff = design.observations();
    if shocks.nrows() != t_eff || shocks.ncols() != design.variables() {
        return Err(Error::Shape(format!(
            "shocks are {}x{}, expected {}x{}",
            shocks.nrows(),
            shocks.ncols(),
            t_eff,
            design.variables()
        )));
    }
    let theta = impulse_responses(&draw.reduced.a, design.lags, &draw.impact, t_eff.saturating_sub(1));
    let contributions: Vec<DMatrix<f64>> = (0..t_eff).map(|t| contributions_at(&theta, shocks, t)).collect();
    let mut remainder = design.y.clone();
    for (t, c) in contributions.iter().enumerate() {
        for i in 0..c.nrows() {
            remainder[(t, i)] -= c.row(i).sum();
        }
    }
    Ok(HistoricalDecomposition { contributions, remainder })
}

/// Contribution matrix for a single period `t` (0-based).
pub fn contributions_at(theta: &[DMatrix<f64>], shocks: &DMatrix<f64>, t: usize) -> DMatrix<f64> {
    let n = shocks.ncols();
    let mut h = DMatrix::zeros(theta[0].nrows(), n);
    for (s, th) in theta.iter().enumerate().take(t + 1) {
        let e = shocks.row(t - s);
        for j in 0..n {
            let ej = e[j];
            for i in 0..h.nrows() {
                h[(i, j)] += th[(i, j)] * ej;
            }
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_design, TimeSeries};
    use crate::linalg::{max_abs_diff, standard_normal_matrix};
    use crate::posterior::ReducedFormDraw;
    use crate::rng::{stream, Purpose};

    fn scalar_setup() -> (StructuralDraw, DesignMatrices) {
        let v = DMatrix::from_column_slice(8, 1, &[1.0, 0.5, 1.2, 0.9, -0.3, 0.4, 1.1, 0.8]);
        let design = build_design(&TimeSeries::from_values(v).unwrap(), 1).unwrap();
        let reduced = ReducedFormDraw {
            a: DMatrix::from_column_slice(2, 1, &[0.6, 0.2]),
            sigma: DMatrix::from_element(1, 1, 0.25),
        };
        (StructuralDraw::new(reduced, DMatrix::from_element(1, 1, -1.0)).unwrap(), design)
    }

    #[test]
    fn scalar_decomposition_matches_hand_convolution() {
        let (draw, design) = scalar_setup();
        let shocks = structural_shocks(&draw, &design).unwrap();
        let hd = historical_decomposition(&draw, &design, &shocks).unwrap();
        let impact = -0.5;
        for t in 0..design.observations() {
            let mut expected = 0.0;
            for s in 0..=t {
                expected += 0.6_f64.powi(s as i32) * impact * shocks[(t - s, 0)];
            }
            assert!((hd.contributions[t][(0, 0)] - expected).abs() < 1e-10);
            assert!((hd.contributions[t][(0, 0)] + hd.remainder[(t, 0)] - design.y[(t, 0)]).abs() < 1e-10);
        }
        assert!((hd.contributions[0][(0, 0)] - impact * shocks[(0, 0)]).abs() < 1e-15);
    }

    #[test]
    fn diagonal_case_scales_residuals() {
        let mut rng = stream(1, Purpose::Haar, 0);
        let v = standard_normal_matrix(20, 2, &mut rng);
        let design = build_design(&TimeSeries::from_values(v).unwrap(), 1).unwrap();
        let reduced = ReducedFormDraw {
            a: DMatrix::from_row_slice(3, 2, &[0.3, 0.0, 0.1, 0.2, 0.0, 0.5]),
            sigma: DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]),
        };
        let draw = StructuralDraw::new(reduced, DMatrix::identity(2, 2)).unwrap();
        let u = residuals(&draw.reduced.a, &design).unwrap();
        let e = structural_shocks(&draw, &design).unwrap();
        for t in 0..u.nrows() {
            assert!((e[(t, 0)] - u[(t, 0)] / 2.0).abs() < 1e-14);
            assert!((e[(t, 1)] - u[(t, 1)] / 3.0).abs() < 1e-14);
        }
        assert!(max_abs_diff(&(&e * draw.impact.transpose()), &u) < 1e-12);
    }
}
