//! Set identification: rotations satisfying sign, zero and narrative
//! restrictions, importance weights and resampling.

pub mod narrative;
pub mod restrictions;
pub mod rotation;
pub mod weights;
pub mod zero_weight;

use std::ops::ControlFlow;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::analysis::decomposition::residuals;
use crate::analysis::irf::ma_coefficients;
use crate::analysis::predictive::AsReduced;
use crate::data::DesignMatrices;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, solve_lower};
use crate::posterior::ReducedFormDraw;
use crate::rng::{stream, Purpose};

pub use narrative::{narrative_satisfied, narrative_weight};
pub use restrictions::{NarrativeKind, NarrativeRestriction, RestrictionSet, Sign};
pub use rotation::{apply_sign_checks, check_shock, haar_sample, zero_restricted_q, SignOutcome};
pub use weights::{ess, resample_indices, ResampleMethod};
pub use zero_weight::{log_zero_weight, log_zero_weight_numerical};

/// Reduced-form draw with a rotation and its importance weight.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralDraw {
    pub reduced: ReducedFormDraw,
    /// Lower Cholesky factor `P` of `Sigma`.
    pub chol: DMatrix<f64>,
    pub q: DMatrix<f64>,
    /// Impact matrix `P Q`.
    pub impact: DMatrix<f64>,
    pub weight: f64,
}

impl StructuralDraw {
    pub fn new(reduced: ReducedFormDraw, q: DMatrix<f64>) -> Result<Self> {
        let chol = cholesky(&reduced.sigma, "error covariance")?;
        let impact = &chol * &q;
        Ok(StructuralDraw { reduced, chol, q, impact, weight: 1.0 })
    }

    /// Structural matrix `Q' P^-1`: rows are shocks, columns variables.
    pub fn structural_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.q.nrows();
        let p_inv = solve_lower(&self.chol, &DMatrix::identity(n, n))?;
        Ok(self.q.transpose() * p_inv)
    }
}

impl AsReduced for StructuralDraw {
    fn reduced(&self) -> &ReducedFormDraw {
        &self.reduced
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentifySettings {
    /// Rotations tried per reduced-form draw before moving on.
    pub max_tries: usize,
    /// Simulations behind each narrative weight.
    pub narrative_sims: usize,
    pub seed: u64,
}

impl Default for IdentifySettings {
    fn default() -> Self {
        IdentifySettings { max_tries: 100, narrative_sims: 1000, seed: 0 }
    }
}

/// Counts behind the acceptance rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AcceptanceStats {
    pub reduced_form: usize,
    pub rotations: usize,
    pub accepted: usize,
}

impl AcceptanceStats {
    /// Accepted draws per rotation tried.
    pub fn rate(&self) -> f64 {
        if self.rotations == 0 {
            0.0
        } else {
            self.accepted as f64 / self.rotations as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedStructuralSample {
    pub draws: Vec<StructuralDraw>,
    pub weights: Vec<f64>,
    pub ess: f64,
    pub stats: AcceptanceStats,
}

impl WeightedStructuralSample {
    /// Unweighted sample of `count` draws, drawn proportionally to the weights.
    pub fn resample(&self, count: usize, method: ResampleMethod, seed: u64) -> Result<Vec<StructuralDraw>> {
        let mut rng = stream(seed, Purpose::Resample, 0);
        let idx = resample_indices(&self.weights, count, method, &mut rng)?;
        Ok(idx.into_iter().map(|i| StructuralDraw { weight: 1.0, ..self.draws[i].clone() }).collect())
    }
}

struct Accepted {
    draw: StructuralDraw,
    log_zero_weight: f64,
    narrative_weight: f64,
}

struct Attempt {
    accepted: Option<Accepted>,
    rotations: usize,
}

/// Accept-reject over rotations for one reduced-form draw.
fn identify_one(
    index: usize,
    reduced: &ReducedFormDraw,
    design: &DesignMatrices,
    restrictions: &RestrictionSet,
    settings: &IdentifySettings,
) -> Result<Attempt> {
    let n = design.variables();
    let lags = design.lags;
    let chol = cholesky(&reduced.sigma, "error covariance")?;
    let narrative = restrictions.narrative();
    let decomposition_h = narrative::decomposition_horizon(narrative);
    let horizon = [restrictions.max_horizon(), decomposition_h].into_iter().flatten().max().unwrap_or(0);
    let base: Vec<DMatrix<f64>> = ma_coefficients(&reduced.a, lags, horizon).iter().map(|m| m * &chol).collect();
    let sign_horizons = restrictions.max_horizon().map_or(0, |h| h + 1);
    let whitened = if narrative.is_empty() {
        None
    } else {
        Some(solve_lower(&chol, &residuals(&reduced.a, design)?.transpose())?.transpose())
    };
    let p_inv = if restrictions.has_structural() { Some(solve_lower(&chol, &DMatrix::identity(n, n))?) } else { None };
    let mut rng = stream(settings.seed, Purpose::Rotation, index as u64);

    for attempt in 1..=settings.max_tries.max(1) {
        let mut q = if restrictions.has_zeros() {
            zero_restricted_q(&base, restrictions, &mut rng)?
        } else {
            haar_sample(n, &mut rng)
        };
        let mut responses: Vec<DMatrix<f64>> = base[..sign_horizons].iter().map(|b| b * &q).collect();
        let mut structural = p_inv.as_ref().map(|pi| q.transpose() * pi);
        if !apply_sign_checks(restrictions, &mut q, &mut responses, structural.as_mut()) {
            continue;
        }
        let mut narrative_w = 1.0;
        if let Some(w) = &whitened {
            let shocks = w * &q;
            let theta: Vec<DMatrix<f64>> = match decomposition_h {
                Some(h) => base[..=h].iter().map(|b| b * &q).collect(),
                None => Vec::new(),
            };
            if !narrative::all_narrative_satisfied(narrative, &theta, &shocks) {
                continue;
            }
            let mut nrng = stream(settings.seed, Purpose::Narrative, index as u64);
            narrative_w = narrative_weight(narrative, &theta, &shocks, settings.narrative_sims, &mut nrng)?;
        }
        let log_zw = log_zero_weight(&reduced.a, lags, &chol, &q, restrictions)?;
        let impact = &chol * &q;
        return Ok(Attempt {
            accepted: Some(Accepted {
                draw: StructuralDraw { reduced: reduced.clone(), chol, q, impact, weight: 1.0 },
                log_zero_weight: log_zw,
                narrative_weight: narrative_w,
            }),
            rotations: attempt,
        });
    }
    Ok(Attempt { accepted: None, rotations: settings.max_tries.max(1) })
}

/// Identifies every supplied reduced-form draw (in parallel, results in
/// input order). Draws for which no rotation passed within `max_tries`
/// are dropped.
pub fn identify(
    reduced: &[ReducedFormDraw],
    design: &DesignMatrices,
    restrictions: &RestrictionSet,
    settings: &IdentifySettings,
) -> Result<WeightedStructuralSample> {
    identify_until(|s| Ok(reduced[s].clone()), reduced.len(), reduced.len(), design, restrictions, settings)
}

/// Identifies reduced-form draws `source(0), source(1), ...` in batches of
/// `target` until `target` draws are accepted or `budget` reduced-form draws
/// have been used, keeping the first `target` accepted in index order.
/// The result does not depend on the number of worker threads.
pub fn identify_until<F>(
    source: F,
    target: usize,
    budget: usize,
    design: &DesignMatrices,
    restrictions: &RestrictionSet,
    settings: &IdentifySettings,
) -> Result<WeightedStructuralSample>
where
    F: Fn(usize) -> Result<ReducedFormDraw> + Sync,
{
    identify_monitored(source, target, budget, design, restrictions, settings, target, |_| ControlFlow::Continue(()))
}

/// [`identify_until`] processing `batch` reduced-form draws at a time and
/// calling `monitor` with the running counts after each batch. Returning
/// `Break` stops early and keeps what was accepted so far. The accepted
/// set does not depend on `batch`.
#[allow(clippy::too_many_arguments)]
pub fn identify_monitored<F, M>(
    source: F,
    target: usize,
    budget: usize,
    design: &DesignMatrices,
    restrictions: &RestrictionSet,
    settings: &IdentifySettings,
    batch: usize,
    mut monitor: M,
) -> Result<WeightedStructuralSample>
where
    F: Fn(usize) -> Result<ReducedFormDraw> + Sync,
    M: FnMut(&AcceptanceStats) -> ControlFlow<()>,
{
    if target == 0 || batch == 0 {
        return Err(Error::InvalidSetting("draw count and batch size must be at least 1".into()));
    }
    if restrictions.variables() != design.variables() {
        return Err(Error::Shape(format!(
            "restrictions are for {} variables, the data has {}",
            restrictions.variables(),
            design.variables()
        )));
    }
    restrictions.validate(design.observations())?;
    let mut stats = AcceptanceStats::default();
    let mut accepted: Vec<Accepted> = Vec::with_capacity(target);
    let mut next = 0;
    while accepted.len() < target && next < budget {
        let end = (next + batch).min(budget);
        let batch: Vec<Attempt> = (next..end)
            .into_par_iter()
            .map(|s| identify_one(s, &source(s)?, design, restrictions, settings))
            .collect::<Result<_>>()?;
        for attempt in batch {
            if accepted.len() == target {
                break;
            }
            stats.reduced_form += 1;
            stats.rotations += attempt.rotations;
            if let Some(a) = attempt.accepted {
                accepted.push(a);
            }
        }
        next = end;
        stats.accepted = accepted.len();
        if monitor(&stats).is_break() {
            break;
        }
    }
    stats.accepted = accepted.len();
    if accepted.is_empty() {
        return Err(Error::NoAcceptedDraws { reduced_form: stats.reduced_form, rotations: stats.rotations });
    }
    let max_log = if restrictions.has_zeros() {
        accepted.iter().map(|a| a.log_zero_weight).fold(f64::NEG_INFINITY, f64::max)
    } else {
        0.0
    };
    let mut draws = Vec::with_capacity(accepted.len());
    let mut weights = Vec::with_capacity(accepted.len());
    for a in accepted {
        let zero_w = if restrictions.has_zeros() { (a.log_zero_weight - max_log).exp() } else { 1.0 };
        let w = zero_w * a.narrative_weight;
        weights.push(w);
        draws.push(StructuralDraw { weight: w, ..a.draw });
    }
    let ess = ess(&weights)?;
    Ok(WeightedStructuralSample { draws, weights, ess, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_design, TimeSeries};
    use crate::linalg::{max_abs_diff, standard_normal_matrix};

    fn setup(n: usize) -> (Vec<ReducedFormDraw>, DesignMatrices) {
        let mut rng = stream(5, Purpose::Haar, 0);
        let v = standard_normal_matrix(40, n, &mut rng);
        let design = build_design(&TimeSeries::from_values(v).unwrap(), 1).unwrap();
        let draws = (0..200)
            .map(|_| {
                let g = standard_normal_matrix(n, n, &mut rng);
                ReducedFormDraw {
                    a: standard_normal_matrix(n + 1, n, &mut rng) * 0.2,
                    sigma: &g * g.transpose() + DMatrix::identity(n, n),
                }
            })
            .collect();
        (draws, design)
    }

    #[test]
    fn vacuous_restrictions_accept_everything() {
        let (draws, design) = setup(3);
        let s = identify(&draws, &design, &RestrictionSet::new(3), &IdentifySettings::default()).unwrap();
        assert_eq!(s.draws.len(), 200);
        assert!(s.weights.iter().all(|&w| w == 1.0));
        assert_eq!(s.ess, 200.0);
        assert_eq!(s.stats.rotations, 200);
    }

    #[test]
    fn single_sign_code_always_passes_first_try() {
        let (draws, design) = setup(2);
        let mut r = RestrictionSet::new(2);
        r.set_irf(1, 0, 0, Sign::Positive).unwrap();
        let s = identify(&draws, &design, &r, &IdentifySettings::default()).unwrap();
        assert_eq!(s.stats.rotations, 200);
        assert!(s.draws.iter().all(|d| d.impact[(1, 0)] > 0.0));
    }

    #[test]
    fn retained_draws_satisfy_zero_and_sign_codes() {
        let (draws, design) = setup(3);
        let mut r = RestrictionSet::new(3);
        r.set_irf(0, 0, 0, Sign::Zero).unwrap();
        r.set_irf(1, 0, 0, Sign::Positive).unwrap();
        r.set_irf(2, 1, 1, Sign::Negative).unwrap();
        let s = identify(&draws, &design, &r, &IdentifySettings::default()).unwrap();
        for d in &s.draws {
            assert!(d.impact[(0, 0)].abs() < 1e-10);
            assert!(d.impact[(1, 0)] > 0.0);
            let theta = crate::analysis::impulse_responses(&d.reduced.a, 1, &d.impact, 1);
            assert!(theta[1][(2, 1)] < 0.0);
            assert!(max_abs_diff(&(d.q.transpose() * &d.q), &DMatrix::identity(3, 3)) < 1e-10);
            assert!(max_abs_diff(&(&d.impact * d.impact.transpose()), &d.reduced.sigma) < 1e-8);
        }
        assert!(s.ess >= 1.0 && s.ess <= s.draws.len() as f64);
    }

    #[test]
    fn result_is_independent_of_thread_count() {
        let (draws, design) = setup(3);
        let mut r = RestrictionSet::new(3);
        r.set_irf(0, 0, 0, Sign::Zero).unwrap();
        r.set_irf(1, 0, 0, Sign::Positive).unwrap();
        r.add_narrative(NarrativeRestriction::shock_sign(0, 1, 5, 2)).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    identify_until(|s| Ok(draws[s % 200].clone()), 50, 400, &design, &r, &IdentifySettings::default())
                })
                .unwrap()
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn batch_size_does_not_change_the_accepted_set() {
        let (draws, design) = setup(3);
        let mut r = RestrictionSet::new(3);
        r.set_irf(0, 0, 0, Sign::Zero).unwrap();
        r.set_irf(1, 0, 0, Sign::Positive).unwrap();
        r.set_irf(2, 1, 0, Sign::Negative).unwrap();
        let settings = IdentifySettings { max_tries: 2, ..IdentifySettings::default() };
        let whole = identify_until(|s| Ok(draws[s].clone()), 60, 200, &design, &r, &settings).unwrap();
        let mut calls = 0;
        let batched = identify_monitored(
            |s| Ok(draws[s].clone()),
            60,
            200,
            &design,
            &r,
            &settings,
            7,
            |_| {
                calls += 1;
                ControlFlow::Continue(())
            },
        )
        .unwrap();
        assert_eq!(whole, batched);
        assert!(calls > 1);
    }

    #[test]
    fn monitor_break_keeps_partial_sample() {
        let (draws, design) = setup(2);
        let r = RestrictionSet::new(2);
        let s = identify_monitored(
            |s| Ok(draws[s].clone()),
            100,
            200,
            &design,
            &r,
            &IdentifySettings::default(),
            30,
            |st| {
                if st.reduced_form >= 30 {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            },
        )
        .unwrap();
        assert_eq!(s.draws.len(), 30);
        assert_eq!(s.stats.accepted, 30);
    }

    #[test]
    fn impossible_restrictions_report_statistics() {
        let (draws, design) = setup(2);
        let mut r = RestrictionSet::new(2);
        r.set_irf(0, 0, 0, Sign::Positive).unwrap();
        r.add_narrative(NarrativeRestriction::decomposition(NarrativeKind::LeastImportant, 0, 0, 0, 1)).unwrap();
        r.add_narrative(NarrativeRestriction::decomposition(NarrativeKind::MostImportant, 0, 0, 0, 1)).unwrap();
        let settings = IdentifySettings { max_tries: 3, ..IdentifySettings::default() };
        match identify(&draws[..5], &design, &r, &settings) {
            Err(Error::NoAcceptedDraws { reduced_form, rotations }) => {
                assert_eq!((reduced_form, rotations), (5, 15));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn resampling_keeps_weighted_means() {
        let (draws, design) = setup(2);
        let mut r = RestrictionSet::new(2);
        r.set_irf(0, 0, 0, Sign::Zero).unwrap();
        let many: Vec<_> = (0..2000).map(|i| draws[i % 200].clone()).collect();
        let s = identify(&many, &design, &r, &IdentifySettings::default()).unwrap();
        let total: f64 = s.weights.iter().sum();
        let weighted = s.draws.iter().zip(&s.weights).map(|(d, w)| d.impact[(1, 0)] * w).sum::<f64>() / total;
        let out = s.resample(4000, ResampleMethod::Stratified, 3).unwrap();
        let vals: Vec<f64> = out.iter().map(|d| d.impact[(1, 0)]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt();
        assert!((mean - weighted).abs() < 3.0 * sd / s.ess.sqrt());
        assert!(out.iter().all(|d| d.weight == 1.0));
    }
}
