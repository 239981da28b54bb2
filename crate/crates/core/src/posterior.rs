//! Conjugate normal-inverse-Wishart posterior and independent sampling of
//! the reduced-form parameters.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution};
use rayon::prelude::*;

use crate::data::DesignMatrices;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, log_det_from_chol, solve_lower, spd_inverse, standard_normal_matrix, symmetrize};
use crate::priors::{DummyObs, NiwPrior};
use crate::rng::{stream, Purpose};

/// Sufficient statistics `X'X`, `X'Y`, `Y'Y` and the row count of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossProducts {
    pub xtx: DMatrix<f64>,
    pub xty: DMatrix<f64>,
    pub yty: DMatrix<f64>,
    pub rows: usize,
}

impl CrossProducts {
    pub fn zeros(n: usize, k: usize) -> Self {
        CrossProducts { xtx: DMatrix::zeros(k, k), xty: DMatrix::zeros(k, n), yty: DMatrix::zeros(n, n), rows: 0 }
    }

    pub fn from_rows(y: &DMatrix<f64>, x: &DMatrix<f64>) -> Self {
        let xt = x.transpose();
        CrossProducts { xtx: &xt * x, xty: &xt * y, yty: y.transpose() * y, rows: y.nrows() }
    }

    pub fn of_design(design: &DesignMatrices) -> Self {
        CrossProducts::from_rows(&design.y, &design.x)
    }

    pub fn of_dummies(dummies: &DummyObs) -> Self {
        let (y, x) = dummies.stacked();
        CrossProducts::from_rows(&y, &x)
    }

    pub fn add(&self, other: &CrossProducts) -> CrossProducts {
        CrossProducts {
            xtx: &self.xtx + &other.xtx,
            xty: &self.xty + &other.xty,
            yty: &self.yty + &other.yty,
            rows: self.rows + other.rows,
        }
    }
}

/// Matrix-normal inverse-Wishart posterior of `(A, Sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NiwPosterior {
    pub b: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub nu: f64,
}

impl NiwPosterior {
    pub fn variables(&self) -> usize {
        self.b.ncols()
    }

    pub fn regressors(&self) -> usize {
        self.b.nrows()
    }

    /// The posterior reused as a prior for a further sample.
    pub fn as_prior(&self) -> NiwPrior {
        NiwPrior { b: self.b.clone(), omega: self.omega.clone(), s: self.s.clone(), nu: self.nu }
    }

    /// Inverse-Wishart mean `S / (nu - N - 1)`.
    pub fn sigma_mean(&self) -> Option<DMatrix<f64>> {
        let denom = self.nu - self.variables() as f64 - 1.0;
        (denom > 0.0).then(|| &self.s / denom)
    }
}

/// Posterior together with the log-determinant of the posterior precision
/// `Omega^-1 + X'X`, which the evidence needs.
pub(crate) struct UpdateParts {
    pub posterior: NiwPosterior,
    pub log_det_precision: f64,
    pub log_det_prior_omega: f64,
}

pub(crate) fn update_parts(prior: &NiwPrior, cross: &CrossProducts) -> Result<UpdateParts> {
    let omega_chol = cholesky(&prior.omega, "prior row covariance")?;
    let log_det_prior_omega = log_det_from_chol(&omega_chol);
    if cross.rows == 0 {
        return Ok(UpdateParts {
            posterior: NiwPosterior {
                b: prior.b.clone(),
                omega: prior.omega.clone(),
                s: prior.s.clone(),
                nu: prior.nu,
            },
            log_det_precision: -log_det_prior_omega,
            log_det_prior_omega,
        });
    }
    let omega_inv = spd_inverse(&prior.omega, "prior row covariance")?;
    let precision = symmetrize(&(&omega_inv + &cross.xtx));
    let chol = precision.clone().cholesky().ok_or(Error::NotPositiveDefinite { what: "posterior precision" })?;
    let log_det_precision = log_det_from_chol(&chol.l());
    let prior_term = &omega_inv * &prior.b;
    let b = chol.solve(&(&prior_term + &cross.xty));
    let omega = symmetrize(&chol.inverse());
    let s = symmetrize(&(&prior.s + &cross.yty + prior.b.transpose() * &prior_term - b.transpose() * &precision * &b));
    cholesky(&s, "posterior scale matrix")?;
    Ok(UpdateParts {
        posterior: NiwPosterior { b, omega, s, nu: prior.nu + cross.rows as f64 },
        log_det_precision,
        log_det_prior_omega,
    })
}

/// Posterior from precomputed cross-products of the augmented sample.
pub fn niw_update_cross(prior: &NiwPrior, cross: &CrossProducts) -> Result<NiwPosterior> {
    Ok(update_parts(prior, cross)?.posterior)
}

/// Posterior given the sample and the dummy observations prepended to it.
pub fn niw_update(prior: &NiwPrior, design: &DesignMatrices, dummies: &DummyObs) -> Result<NiwPosterior> {
    let n = prior.variables();
    let k = prior.regressors();
    if design.variables() != n || design.regressors() != k {
        return Err(Error::Shape(format!(
            "prior is {}x{} but the design has {} regressors and {} variables",
            k,
            n,
            design.regressors(),
            design.variables()
        )));
    }
    let cross = CrossProducts::of_design(design).add(&CrossProducts::of_dummies(dummies));
    niw_update_cross(prior, &cross)
}

/// One draw of the reduced-form coefficients and error covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedFormDraw {
    pub a: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
}

/// How the coefficient matrix is drawn given `Sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingScheme {
    /// `A = B + L_Omega Z L_Sigma'` in one step.
    Joint,
    /// One equation at a time, each conditional on the previously drawn ones.
    #[default]
    EquationWise,
}

/// Cholesky factors reused across draws from one posterior.
#[derive(Debug, Clone)]
pub struct PosteriorFactors {
    posterior: NiwPosterior,
    omega_chol: DMatrix<f64>,
    s_chol: DMatrix<f64>,
}

impl PosteriorFactors {
    pub fn new(posterior: &NiwPosterior) -> Result<Self> {
        let n = posterior.variables() as f64;
        if posterior.nu.is_nan() || posterior.nu <= n - 1.0 {
            return Err(Error::InvalidSetting(format!(
                "posterior degrees of freedom {} must exceed N - 1 = {}",
                posterior.nu,
                n - 1.0
            )));
        }
        Ok(PosteriorFactors {
            omega_chol: cholesky(&posterior.omega, "posterior row covariance")?,
            s_chol: cholesky(&posterior.s, "posterior scale matrix")?,
            posterior: posterior.clone(),
        })
    }

    pub fn posterior(&self) -> &NiwPosterior {
        &self.posterior
    }

    /// Inverse-Wishart draw through the Bartlett decomposition.
    pub fn sample_sigma<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DMatrix<f64>> {
        let n = self.posterior.variables();
        let mut bartlett = DMatrix::zeros(n, n);
        for i in 0..n {
            let chi = ChiSquared::new(self.posterior.nu - i as f64)
                .map_err(|e| Error::InvalidSetting(format!("chi-square degrees of freedom: {e}")))?;
            bartlett[(i, i)] = chi.sample(rng).sqrt();
            for j in 0..i {
                bartlett[(i, j)] = rng.sample(rand_distr::StandardNormal);
            }
        }
        let inv = solve_lower(&bartlett, &DMatrix::identity(n, n))?;
        let t = &self.s_chol * inv.transpose();
        Ok(symmetrize(&(&t * t.transpose())))
    }

    pub fn sample_coefficients<R: Rng + ?Sized>(
        &self,
        sigma: &DMatrix<f64>,
        scheme: SamplingScheme,
        rng: &mut R,
    ) -> Result<DMatrix<f64>> {
        let n = self.posterior.variables();
        let k = self.posterior.regressors();
        let z = standard_normal_matrix(k, n, rng);
        let shocks = &self.omega_chol * z;
        match scheme {
            SamplingScheme::Joint => {
                let l_sigma = cholesky(sigma, "error covariance")?;
                Ok(&self.posterior.b + shocks * l_sigma.transpose())
            }
            SamplingScheme::EquationWise => {
                let mut a = self.posterior.b.clone();
                for i in 0..n {
                    let mut column = a.column(i).into_owned();
                    let mut cond_var = sigma[(i, i)];
                    if i > 0 {
                        let s11 = sigma.view((0, 0), (i, i)).into_owned();
                        let s12 = sigma.view((0, i), (i, 1)).into_owned();
                        let chol = s11.cholesky().ok_or(Error::NotPositiveDefinite { what: "error covariance" })?;
                        let coef = chol.solve(&s12);
                        let dev = a.columns(0, i) - self.posterior.b.columns(0, i);
                        column += dev * &coef;
                        cond_var -= (s12.transpose() * &coef)[(0, 0)];
                    }
                    if cond_var.is_nan() || cond_var <= 0.0 {
                        return Err(Error::NotPositiveDefinite { what: "error covariance" });
                    }
                    column += shocks.column(i) * cond_var.sqrt();
                    a.set_column(i, &column);
                }
                Ok(a)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, scheme: SamplingScheme, rng: &mut R) -> Result<ReducedFormDraw> {
        let sigma = self.sample_sigma(rng)?;
        let a = self.sample_coefficients(&sigma, scheme, rng)?;
        Ok(ReducedFormDraw { a, sigma })
    }
}

/// Independent draws from one posterior. Draw `s` uses its own stream, so
/// it does not depend on `count` or on the thread schedule.
pub fn sample_niw(
    posterior: &NiwPosterior,
    count: usize,
    seed: u64,
    scheme: SamplingScheme,
) -> Result<Vec<ReducedFormDraw>> {
    sample_niw_mixture(std::slice::from_ref(posterior), count, seed, scheme)
}

/// Index of the hyper-parameter draw paired with posterior draw `s`
/// (0-based) when `hyper_draws` hyper draws serve `count` posterior draws.
pub fn paired_hyper_index(s: usize, count: usize, hyper_draws: usize) -> usize {
    ((s + 1) * hyper_draws).div_ceil(count) - 1
}

/// Draws integrating over a set of posteriors, one per hyper-parameter draw,
/// paired with the posterior draws by uniform thinning.
pub fn sample_niw_mixture(
    posteriors: &[NiwPosterior],
    count: usize,
    seed: u64,
    scheme: SamplingScheme,
) -> Result<Vec<ReducedFormDraw>> {
    if count == 0 {
        return Err(Error::InvalidSetting("posterior draw count must be at least 1".into()));
    }
    if posteriors.is_empty() {
        return Err(Error::EmptyDraws);
    }
    let factors = posteriors.iter().map(PosteriorFactors::new).collect::<Result<Vec<_>>>()?;
    (0..count)
        .into_par_iter()
        .map(|s| {
            let f = &factors[paired_hyper_index(s, count, factors.len())];
            let mut rng = stream(seed, Purpose::Posterior, s as u64);
            f.sample(scheme, &mut rng)
        })
        .collect()
}
