//! Narrative restrictions on structural shocks and historical decompositions.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::identification::restrictions::{NarrativeKind, NarrativeRestriction};

/// Contribution of each shock to `variable` in period `t`,
/// `sum_{s <= t} Theta_s(variable, j) e_{t-s}(j)`.
fn contributions(theta: &[DMatrix<f64>], shocks: &DMatrix<f64>, variable: usize, t: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (s, th) in theta.iter().enumerate().take(t + 1) {
        let e = shocks.row(t - s);
        for (j, o) in out.iter_mut().enumerate() {
            *o += th[(variable, j)] * e[j];
        }
    }
}

fn holds_at(
    r: &NarrativeRestriction,
    theta: &[DMatrix<f64>],
    shocks: &DMatrix<f64>,
    t: usize,
    buf: &mut [f64],
) -> bool {
    if r.kind == NarrativeKind::ShockSign {
        return f64::from(r.sign) * shocks[(t, r.shock)] > 0.0;
    }
    contributions(theta, shocks, r.variable, t, buf);
    let own = buf[r.shock].abs();
    let others = buf.iter().enumerate().filter(|&(j, _)| j != r.shock).map(|(_, v)| v.abs());
    match r.kind {
        NarrativeKind::MostImportant => others.clone().all(|o| own > o),
        NarrativeKind::LeastImportant => others.clone().all(|o| own < o),
        NarrativeKind::Overwhelming => own > others.sum::<f64>(),
        NarrativeKind::Negligible => own < others.sum::<f64>(),
        NarrativeKind::ShockSign => unreachable!(),
    }
}

/// True when the restriction holds in every period of its window.
///
/// `shocks` has one row per effective period; `theta` must reach the last
/// restricted period as a horizon when the restriction involves the
/// historical decomposition.
pub fn narrative_satisfied(r: &NarrativeRestriction, theta: &[DMatrix<f64>], shocks: &DMatrix<f64>) -> bool {
    let mut buf = vec![0.0; shocks.ncols()];
    r.periods().all(|t| holds_at(r, theta, shocks, t, &mut buf))
}

pub fn all_narrative_satisfied(rs: &[NarrativeRestriction], theta: &[DMatrix<f64>], shocks: &DMatrix<f64>) -> bool {
    let mut buf = vec![0.0; shocks.ncols()];
    rs.iter().all(|r| r.periods().all(|t| holds_at(r, theta, shocks, t, &mut buf)))
}

/// Largest period a restriction set looks at through the decomposition.
pub fn decomposition_horizon(rs: &[NarrativeRestriction]) -> Option<usize> {
    rs.iter().filter(|r| r.kind.uses_decomposition()).map(|r| r.start + r.length - 1).max()
}

/// Importance weight `1 / p`, where `p` is the probability that the
/// restrictions hold when the shocks of the restricted periods are redrawn
/// from a standard normal and everything else is kept. Estimated from
/// `sims` simulations and floored at `1 / sims`.
pub fn narrative_weight<R: Rng + ?Sized>(
    rs: &[NarrativeRestriction],
    theta: &[DMatrix<f64>],
    shocks: &DMatrix<f64>,
    sims: usize,
    rng: &mut R,
) -> Result<f64> {
    if sims < 1 {
        return Err(Error::InvalidSetting("narrative simulation count must be at least 1".into()));
    }
    if rs.is_empty() {
        return Ok(1.0);
    }
    let periods: BTreeSet<usize> = rs.iter().flat_map(|r| r.periods()).collect();
    let mut work = shocks.clone();
    let mut hits = 0usize;
    for _ in 0..sims {
        for &t in &periods {
            for j in 0..work.ncols() {
                work[(t, j)] = rng.sample(StandardNormal);
            }
        }
        hits += all_narrative_satisfied(rs, theta, &work) as usize;
    }
    let p = (hits as f64 / sims as f64).max(1.0 / sims as f64);
    Ok(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn shock_sign_definition() {
        let shocks = DMatrix::from_row_slice(2, 2, &[0.3, -0.7, 1.0, 1.0]);
        let r = NarrativeRestriction::shock_sign(1, -1, 0, 1);
        assert!(narrative_satisfied(&r, &[], &shocks));
        let r2 = NarrativeRestriction::shock_sign(1, -1, 0, 2);
        assert!(!narrative_satisfied(&r2, &[], &shocks));
    }

    fn single_period(contrib: &[f64]) -> (Vec<DMatrix<f64>>, DMatrix<f64>) {
        let n = contrib.len();
        let theta = vec![DMatrix::from_fn(n, n, |i, j| if i == 0 { contrib[j] } else { (i == j) as u8 as f64 })];
        (theta, DMatrix::from_element(1, n, 1.0))
    }

    #[test]
    fn decomposition_kinds() {
        let (theta, shocks) = single_period(&[5.0, 1.0, 1.0, 1.0, 1.0]);
        let over = NarrativeRestriction::decomposition(NarrativeKind::Overwhelming, 0, 0, 0, 1);
        assert!(narrative_satisfied(&over, &theta, &shocks));
        let negl = NarrativeRestriction::decomposition(NarrativeKind::Negligible, 0, 0, 0, 1);
        assert!(!narrative_satisfied(&negl, &theta, &shocks));

        let (theta, shocks) = single_period(&[2.0, 3.0, 1.0]);
        let most = NarrativeRestriction::decomposition(NarrativeKind::MostImportant, 0, 0, 0, 1);
        assert!(!narrative_satisfied(&most, &theta, &shocks));
        let most2 = NarrativeRestriction::decomposition(NarrativeKind::MostImportant, 0, 1, 0, 1);
        assert!(narrative_satisfied(&most2, &theta, &shocks));
        let least = NarrativeRestriction::decomposition(NarrativeKind::LeastImportant, 0, 2, 0, 1);
        assert!(narrative_satisfied(&least, &theta, &shocks));
    }

    #[test]
    fn decomposition_uses_earlier_shocks() {
        let theta = vec![DMatrix::identity(2, 2), DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 0.0, 0.0])];
        let shocks = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        // Period 1: shock 1 contributes 1, shock 2 contributes 3 via its lag.
        let most = NarrativeRestriction::decomposition(NarrativeKind::MostImportant, 0, 1, 1, 1);
        assert!(narrative_satisfied(&most, &theta, &shocks));
        assert_eq!(decomposition_horizon(&[most]), Some(1));
    }

    #[test]
    fn empty_set_has_unit_weight() {
        let mut rng = stream(1, Purpose::Narrative, 0);
        assert_eq!(narrative_weight(&[], &[], &DMatrix::zeros(3, 2), 10, &mut rng).unwrap(), 1.0);
        assert!(narrative_weight(&[], &[], &DMatrix::zeros(3, 2), 0, &mut rng).is_err());
    }

    #[test]
    fn sign_weights_reflect_normal_symmetry() {
        let shocks = DMatrix::from_element(4, 2, -1.0);
        let mut rng = stream(2, Purpose::Narrative, 0);
        let one = [NarrativeRestriction::shock_sign(0, -1, 1, 1)];
        let w = narrative_weight(&one, &[], &shocks, 10_000, &mut rng).unwrap();
        assert!((w / 2.0 - 1.0).abs() < 0.05, "{w}");
        let two = [NarrativeRestriction::shock_sign(0, -1, 1, 1), NarrativeRestriction::shock_sign(1, -1, 3, 1)];
        let w = narrative_weight(&two, &[], &shocks, 10_000, &mut rng).unwrap();
        assert!((w / 4.0 - 1.0).abs() < 0.1, "{w}");
    }

    #[test]
    fn impossible_restriction_is_floored() {
        let shocks = DMatrix::from_element(1, 1, 1.0);
        let theta = vec![DMatrix::from_element(1, 1, 1.0)];
        let r = [NarrativeRestriction::decomposition(NarrativeKind::LeastImportant, 0, 0, 0, 1)];
        let mut rng = stream(3, Purpose::Narrative, 0);
        // With one shock "less than every other" is vacuous, so it always holds.
        assert_eq!(narrative_weight(&r, &theta, &shocks, 50, &mut rng).unwrap(), 1.0);
        let o = [NarrativeRestriction::decomposition(NarrativeKind::Negligible, 0, 0, 0, 1)];
        assert_eq!(narrative_weight(&o, &theta, &shocks, 50, &mut rng).unwrap(), 50.0);
    }
}
