//! Marginal likelihood of the conjugate VAR and adaptive random-walk
//! Metropolis sampling of the Minnesota hyper-parameters.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::data::{build_design, DesignMatrices, TimeSeries};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, log_det_from_chol, standard_normal_vector};
use crate::posterior::{update_parts, CrossProducts, NiwPosterior};
use crate::priors::{
    dummy_obs_from_means, initial_means, log_hyperprior, minnesota_niw, DummyObs, DummyToggles, HyperPrior,
    MinnesotaHyper, NiwPrior,
};
use crate::rng::{stream, Purpose};

/// Log evidence of a sample summarised by `cross` under the NIW prior.
pub fn niw_log_evidence(prior: &NiwPrior, cross: &CrossProducts) -> Result<f64> {
    if cross.rows == 0 {
        return Ok(0.0);
    }
    let parts = update_parts(prior, cross)?;
    let n = prior.variables();
    let t = cross.rows as f64;
    let nu0 = prior.nu;
    let log_det_s0 = log_det_from_chol(&cholesky(&prior.s, "prior scale matrix")?);
    let log_det_s_post = log_det_from_chol(&cholesky(&parts.posterior.s, "posterior scale matrix")?);
    let gammas: f64 =
        (1..=n).map(|i| ln_gamma((t + nu0 + 1.0 - i as f64) / 2.0) - ln_gamma((nu0 + 1.0 - i as f64) / 2.0)).sum();
    let nf = n as f64;
    Ok(-(t * nf / 2.0) * PI.ln()
        + gammas
        + (nf / 2.0) * (-parts.log_det_precision - parts.log_det_prior_omega)
        + (nu0 / 2.0) * log_det_s0
        - ((nu0 + t) / 2.0) * log_det_s_post)
}

/// Evidence of the sample with the dummy rows prepended, minus the evidence
/// of the dummy rows alone, so the dummies act as prior information.
pub fn log_marginal_likelihood_cross(prior: &NiwPrior, data: &CrossProducts, dummies: &CrossProducts) -> Result<f64> {
    let augmented = niw_log_evidence(prior, &data.add(dummies))?;
    let dummy_only = niw_log_evidence(prior, dummies)?;
    Ok(augmented - dummy_only)
}

pub fn log_marginal_likelihood(
    design: &DesignMatrices,
    dummies: &DummyObs,
    hyper: &MinnesotaHyper,
    stationary: &[bool],
) -> Result<f64> {
    let prior = minnesota_niw(hyper, design.lags, design.variables(), stationary)?;
    log_marginal_likelihood_cross(&prior, &CrossProducts::of_design(design), &CrossProducts::of_dummies(dummies))
}

/// Everything needed to evaluate the hyper-posterior repeatedly.
#[derive(Debug, Clone)]
pub struct HyperModel {
    data: CrossProducts,
    initial_means: DVector<f64>,
    lags: usize,
    stationary: Vec<bool>,
    toggles: DummyToggles,
    prior: HyperPrior,
}

impl HyperModel {
    pub fn new(
        ts: &TimeSeries,
        lags: usize,
        stationary: Vec<bool>,
        toggles: DummyToggles,
        prior: HyperPrior,
    ) -> Result<Self> {
        let design = build_design(ts, lags)?;
        HyperModel::from_design(&design, initial_means(ts, lags)?, stationary, toggles, prior)
    }

    pub fn from_design(
        design: &DesignMatrices,
        initial_means: DVector<f64>,
        stationary: Vec<bool>,
        toggles: DummyToggles,
        prior: HyperPrior,
    ) -> Result<Self> {
        let n = design.variables();
        if stationary.len() != n || initial_means.len() != n {
            return Err(Error::Shape(format!(
                "{} stationary flags and {} initial means for {} variables",
                stationary.len(),
                initial_means.len(),
                n
            )));
        }
        prior.validate()?;
        Ok(HyperModel {
            data: CrossProducts::of_design(design),
            initial_means,
            lags: design.lags,
            stationary,
            toggles,
            prior,
        })
    }

    pub fn variables(&self) -> usize {
        self.initial_means.len()
    }

    pub fn hyper_prior(&self) -> &HyperPrior {
        &self.prior
    }

    pub fn niw_prior(&self, hyper: &MinnesotaHyper) -> Result<NiwPrior> {
        minnesota_niw(hyper, self.lags, self.variables(), &self.stationary)
    }

    pub fn dummies(&self, hyper: &MinnesotaHyper) -> Result<DummyObs> {
        dummy_obs_from_means(hyper, &self.initial_means, self.lags, self.toggles)
    }

    /// Sample and dummy rows stacked, as seen by the posterior update.
    pub fn augmented(&self, hyper: &MinnesotaHyper) -> Result<CrossProducts> {
        Ok(self.data.add(&CrossProducts::of_dummies(&self.dummies(hyper)?)))
    }

    pub fn log_marginal_likelihood(&self, hyper: &MinnesotaHyper) -> Result<f64> {
        let prior = self.niw_prior(hyper)?;
        let dummies = CrossProducts::of_dummies(&self.dummies(hyper)?);
        log_marginal_likelihood_cross(&prior, &self.data, &dummies)
    }

    pub fn log_posterior(&self, hyper: &MinnesotaHyper) -> Result<f64> {
        Ok(self.log_marginal_likelihood(hyper)? + log_hyperprior(hyper, &self.prior))
    }

    pub fn posterior(&self, hyper: &MinnesotaHyper) -> Result<NiwPosterior> {
        let prior = self.niw_prior(hyper)?;
        Ok(update_parts(&prior, &self.augmented(hyper)?)?.posterior)
    }
}

/// Output of the generic adaptive sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    /// Kept draws, one per row.
    pub draws: DMatrix<f64>,
    pub log_target: Vec<f64>,
    /// Fraction of accepted proposals over the kept iterations.
    pub acceptance_rate: f64,
}

/// Tuning constants of the adaptive sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveSettings {
    /// Iterations run with the initial proposal before adapting.
    pub warmup: usize,
    /// Initial proposal variance per coordinate.
    pub initial_variance: f64,
    /// Ridge added to the adapted covariance.
    pub ridge: f64,
}

impl Default for AdaptiveSettings {
    fn default() -> Self {
        AdaptiveSettings { warmup: 100, initial_variance: 0.01, ridge: 1e-8 }
    }
}

/// Running mean and covariance of the chain.
struct Welford {
    count: f64,
    mean: DVector<f64>,
    m2: DMatrix<f64>,
}

impl Welford {
    fn new(d: usize) -> Self {
        Welford { count: 0.0, mean: DVector::zeros(d), m2: DMatrix::zeros(d, d) }
    }

    fn push(&mut self, x: &DVector<f64>) {
        self.count += 1.0;
        let delta = x - &self.mean;
        self.mean += &delta / self.count;
        let delta2 = x - &self.mean;
        self.m2 += &delta * delta2.transpose();
    }

    fn covariance(&self) -> DMatrix<f64> {
        &self.m2 / (self.count - 1.0).max(1.0)
    }
}

/// Random-walk Metropolis on `R^d` whose Gaussian proposal covariance tracks
/// the running covariance of the chain, scaled by `2.38^2 / d`.
pub fn adaptive_rwmh<F>(
    mut log_target: F,
    init: DVector<f64>,
    draws: usize,
    burn_in: usize,
    seed: u64,
    settings: AdaptiveSettings,
) -> Result<ChainOutput>
where
    F: FnMut(&DVector<f64>) -> f64,
{
    let d = init.len();
    if d == 0 {
        return Err(Error::NothingToEstimate);
    }
    if burn_in < 1 || draws <= burn_in {
        return Err(Error::InvalidSetting(format!(
            "need draws > burn_in >= 1, got draws = {draws}, burn_in = {burn_in}"
        )));
    }
    let mut current = init;
    let mut current_lp = log_target(&current);
    if !current_lp.is_finite() {
        return Err(Error::NonFiniteTarget);
    }
    let mut rng = stream(seed, Purpose::Hyper, 0);
    let scale = 2.38 * 2.38 / d as f64;
    let mut proposal_chol = DMatrix::identity(d, d) * settings.initial_variance.sqrt();
    let mut stats = Welford::new(d);
    let kept = draws - burn_in;
    let mut out = DMatrix::zeros(kept, d);
    let mut out_lp = Vec::with_capacity(kept);
    let mut accepted_kept = 0usize;

    for iter in 0..draws {
        let z = standard_normal_vector(d, &mut rng);
        let candidate = &current + &proposal_chol * z;
        let candidate_lp = log_target(&candidate);
        let u: f64 = rng.random();
        let accept = candidate_lp.is_finite() && u.ln() < candidate_lp - current_lp;
        if accept {
            current = candidate;
            current_lp = candidate_lp;
        }
        stats.push(&current);
        if iter >= burn_in {
            let row = iter - burn_in;
            out.set_row(row, &current.transpose());
            out_lp.push(current_lp);
            accepted_kept += accept as usize;
        }
        if iter + 1 >= settings.warmup {
            let cov = stats.covariance() * scale + DMatrix::identity(d, d) * settings.ridge;
            if let Some(c) = cov.cholesky() {
                proposal_chol = c.l();
            }
        }
    }
    Ok(ChainOutput { draws: out, log_target: out_lp, acceptance_rate: accepted_kept as f64 / kept as f64 })
}

/// Kept hyper-parameter draws.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperDraws {
    pub draws: Vec<MinnesotaHyper>,
    pub log_posterior: Vec<f64>,
    pub acceptance_rate: f64,
}

impl HyperDraws {
    /// Column labels of [`HyperDraws::matrix`].
    pub fn names(&self) -> Vec<String> {
        let n = self.draws.first().map_or(0, |h| h.psi.len());
        let mut names = vec!["mu".to_string(), "delta".to_string(), "lambda".to_string()];
        names.extend((1..=n).map(|i| format!("psi{i}")));
        names
    }

    /// All hyper-parameters, one draw per row: `mu, delta, lambda, psi...`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.draws.first().map_or(0, |h| h.psi.len());
        DMatrix::from_fn(self.draws.len(), 3 + n, |r, c| {
            let h = &self.draws[r];
            match c {
                0 => h.mu,
                1 => h.delta,
                2 => h.lambda,
                _ => h.psi[c - 3],
            }
        })
    }
}

fn pack(hyper: &MinnesotaHyper, prior: &HyperPrior) -> DVector<f64> {
    let f = prior.estimate;
    let mut v = Vec::new();
    if f.mu {
        v.push(hyper.mu.ln());
    }
    if f.delta {
        v.push(hyper.delta.ln());
    }
    if f.lambda {
        v.push(hyper.lambda.ln());
    }
    if f.psi {
        v.extend(hyper.psi.iter().map(|p| p.ln()));
    }
    DVector::from_vec(v)
}

fn unpack(u: &DVector<f64>, base: &MinnesotaHyper, prior: &HyperPrior) -> MinnesotaHyper {
    let f = prior.estimate;
    let mut h = base.clone();
    let mut i = 0;
    let mut next = || {
        i += 1;
        u[i - 1].exp()
    };
    if f.mu {
        h.mu = next();
    }
    if f.delta {
        h.delta = next();
    }
    if f.lambda {
        h.lambda = next();
    }
    if f.psi {
        for j in 0..h.psi.len() {
            h.psi[j] = next();
        }
    }
    h
}

/// Samples the hyper-posterior on the log scale. Groups not flagged for
/// estimation stay at their value in `init`.
pub fn estimate_hyper(
    model: &HyperModel,
    init: &MinnesotaHyper,
    draws: usize,
    burn_in: usize,
    seed: u64,
) -> Result<HyperDraws> {
    let prior = model.hyper_prior();
    if !prior.estimate.any() {
        return Err(Error::NothingToEstimate);
    }
    init.validate()?;
    if model.log_posterior(init)?.is_nan() {
        return Err(Error::NonFiniteTarget);
    }
    let target = |u: &DVector<f64>| {
        let h = unpack(u, init, prior);
        if h.validate().is_err() {
            return f64::NEG_INFINITY;
        }
        match model.log_posterior(&h) {
            Ok(lp) => lp + u.sum(),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let chain = adaptive_rwmh(target, pack(init, prior), draws, burn_in, seed, AdaptiveSettings::default())?;
    let kept =
        (0..chain.draws.nrows()).map(|r| unpack(&chain.draws.row(r).transpose(), init, prior)).collect::<Vec<_>>();
    let log_posterior = chain.log_target.iter().zip(0..).map(|(lp, r)| lp - chain.draws.row(r).sum()).collect();
    Ok(HyperDraws { draws: kept, log_posterior, acceptance_rate: chain.acceptance_rate })
}
