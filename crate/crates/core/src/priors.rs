//! Minnesota normal-inverse-Wishart prior, sum-of-coefficients and
//! single-unit-root dummy observations, and the hyper-prior densities.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::data::{build_design, TimeSeries};
use crate::error::{Error, Result};

/// Prior variance of the constant term. Effectively flat.
pub const CONSTANT_PRIOR_VARIANCE: f64 = 1e6;

/// Shape and scale of a gamma hyper-prior with mode 1 and standard deviation 1.
/// Solves `(k - 1) s = 1` and `k s^2 = 1`, which gives `k = phi^2`, `s = 1 / phi`.
const UNIT_MODE_GAMMA_SHAPE: f64 = 2.618_033_988_749_895;
const UNIT_MODE_GAMMA_SCALE: f64 = 0.618_033_988_749_895;

/// Hyper-parameters of the hierarchical Minnesota prior.
#[derive(Debug, Clone, PartialEq)]
pub struct MinnesotaHyper {
    /// Sum-of-coefficients tightness.
    pub mu: f64,
    /// Single-unit-root tightness.
    pub delta: f64,
    /// Overall shrinkage.
    pub lambda: f64,
    /// Per-variable scales.
    pub psi: DVector<f64>,
}

impl MinnesotaHyper {
    pub fn new(mu: f64, delta: f64, lambda: f64, psi: DVector<f64>) -> Result<Self> {
        let h = MinnesotaHyper { mu, delta, lambda, psi };
        h.validate()?;
        Ok(h)
    }

    /// `mu = 1`, `delta = 1`, `lambda = 0.2` with the given scales.
    pub fn with_psi(psi: DVector<f64>) -> Result<Self> {
        MinnesotaHyper::new(1.0, 1.0, 0.2, psi)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.mu) {
            return Err(Error::InvalidHyper(format!("mu = {}", self.mu)));
        }
        if !ok(self.delta) {
            return Err(Error::InvalidHyper(format!("delta = {}", self.delta)));
        }
        if !ok(self.lambda) {
            return Err(Error::InvalidHyper(format!("lambda = {}", self.lambda)));
        }
        if self.psi.is_empty() {
            return Err(Error::InvalidHyper("psi is empty".into()));
        }
        if let Some(i) = self.psi.iter().position(|&v| !ok(v)) {
            return Err(Error::InvalidHyper(format!("psi[{}] = {}", i + 1, self.psi[i])));
        }
        Ok(())
    }
}

/// Which hyper-parameter groups are estimated rather than held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimateFlags {
    pub mu: bool,
    pub delta: bool,
    pub lambda: bool,
    pub psi: bool,
}

impl Default for EstimateFlags {
    fn default() -> Self {
        EstimateFlags { mu: true, delta: true, lambda: true, psi: true }
    }
}

impl EstimateFlags {
    pub fn none() -> Self {
        EstimateFlags { mu: false, delta: false, lambda: false, psi: false }
    }

    pub fn any(&self) -> bool {
        self.mu || self.delta || self.lambda || self.psi
    }
}

/// Gamma hyper-priors (shape, scale) on `mu`, `delta`, `lambda` and an
/// inverse-gamma (shape, scale) shared by the components of `psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperPrior {
    pub mu_shape: f64,
    pub mu_scale: f64,
    pub delta_shape: f64,
    pub delta_scale: f64,
    pub lambda_shape: f64,
    pub lambda_scale: f64,
    pub psi_shape: f64,
    pub psi_scale: f64,
    pub estimate: EstimateFlags,
}

impl Default for HyperPrior {
    fn default() -> Self {
        HyperPrior {
            mu_shape: UNIT_MODE_GAMMA_SHAPE,
            mu_scale: UNIT_MODE_GAMMA_SCALE,
            delta_shape: UNIT_MODE_GAMMA_SHAPE,
            delta_scale: UNIT_MODE_GAMMA_SCALE,
            lambda_shape: 1.370156,
            lambda_scale: 0.5403124,
            psi_shape: 0.02 * 0.02,
            psi_scale: 0.02 * 0.02,
            estimate: EstimateFlags::default(),
        }
    }
}

impl HyperPrior {
    pub fn validate(&self) -> Result<()> {
        let params = [
            ("mu_shape", self.mu_shape),
            ("mu_scale", self.mu_scale),
            ("delta_shape", self.delta_shape),
            ("delta_scale", self.delta_scale),
            ("lambda_shape", self.lambda_shape),
            ("lambda_scale", self.lambda_scale),
            ("psi_shape", self.psi_shape),
            ("psi_scale", self.psi_scale),
        ];
        for (name, v) in params {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidHyper(format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

pub fn gamma_log_density(x: f64, shape: f64, scale: f64) -> f64 {
    (shape - 1.0) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln()
}

pub fn inverse_gamma_log_density(x: f64, shape: f64, scale: f64) -> f64 {
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

/// Log hyper-prior density. Groups that are not estimated contribute zero.
pub fn log_hyperprior(hyper: &MinnesotaHyper, prior: &HyperPrior) -> f64 {
    let flags = prior.estimate;
    let mut lp = 0.0;
    if flags.mu {
        lp += gamma_log_density(hyper.mu, prior.mu_shape, prior.mu_scale);
    }
    if flags.delta {
        lp += gamma_log_density(hyper.delta, prior.delta_shape, prior.delta_scale);
    }
    if flags.lambda {
        lp += gamma_log_density(hyper.lambda, prior.lambda_shape, prior.lambda_scale);
    }
    if flags.psi {
        lp += hyper.psi.iter().map(|&v| inverse_gamma_log_density(v, prior.psi_shape, prior.psi_scale)).sum::<f64>();
    }
    lp
}

/// Residual variances of univariate AR(p)-with-constant least-squares fits,
/// one per variable.
pub fn default_psi(ts: &TimeSeries, lags: usize) -> Result<DVector<f64>> {
    let n = ts.variables();
    if ts.len() <= lags + 2 {
        return Err(Error::TooFewObservations { observations: ts.len(), lags: lags + 2 });
    }
    let mut psi = DVector::zeros(n);
    for i in 0..n {
        let col = ts.values().column(i).into_owned();
        let single = TimeSeries::from_values(DMatrix::from_column_slice(col.len(), 1, col.as_slice()))?;
        let d = build_design(&single, lags)?;
        let xtx = d.x.transpose() * &d.x;
        let xty = d.x.transpose() * &d.y;
        let chol =
            xtx.cholesky().ok_or(Error::DegenerateRegression { variable: i + 1, reason: "singular regressors" })?;
        let beta = chol.solve(&xty);
        let resid = &d.y - &d.x * beta;
        let dof = d.observations() as f64 - (lags + 1) as f64;
        let var = resid.norm_squared() / dof;
        let mean = d.y.mean();
        let total = d.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d.observations() as f64;
        if var.is_nan() || var <= 1e-12 * total.max(mean * mean) || !var.is_finite() {
            return Err(Error::DegenerateRegression { variable: i + 1, reason: "zero residual variance" });
        }
        psi[i] = var;
    }
    Ok(psi)
}

/// Matrix-normal inverse-Wishart prior for `(A, Sigma)`:
/// `vec(A) | Sigma ~ N(vec(b), Sigma (x) omega)`, `Sigma ~ IW(s, nu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NiwPrior {
    pub b: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub nu: f64,
}

impl NiwPrior {
    pub fn variables(&self) -> usize {
        self.b.ncols()
    }

    pub fn regressors(&self) -> usize {
        self.b.nrows()
    }
}

pub fn minnesota_niw(hyper: &MinnesotaHyper, lags: usize, n: usize, stationary: &[bool]) -> Result<NiwPrior> {
    hyper.validate()?;
    if hyper.psi.len() != n || stationary.len() != n {
        return Err(Error::Shape(format!(
            "psi has {} entries and stationary {} flags for {} variables",
            hyper.psi.len(),
            stationary.len(),
            n
        )));
    }
    let k = n * lags + 1;
    let mut b = DMatrix::zeros(k, n);
    for (j, &st) in stationary.iter().enumerate() {
        if !st {
            b[(j, j)] = 1.0;
        }
    }
    let lambda2 = hyper.lambda * hyper.lambda;
    let mut omega = DMatrix::zeros(k, k);
    for l in 0..lags {
        let l2 = ((l + 1) * (l + 1)) as f64;
        for j in 0..n {
            let r = l * n + j;
            omega[(r, r)] = lambda2 / (l2 * hyper.psi[j]);
        }
    }
    omega[(k - 1, k - 1)] = CONSTANT_PRIOR_VARIANCE;
    let s = DMatrix::from_diagonal(&hyper.psi);
    Ok(NiwPrior { b, omega, s, nu: n as f64 + 2.0 })
}

/// Which dummy-observation blocks are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DummyToggles {
    pub sum_of_coefficients: bool,
    pub single_unit_root: bool,
}

impl Default for DummyToggles {
    fn default() -> Self {
        DummyToggles { sum_of_coefficients: true, single_unit_root: true }
    }
}

/// Dummy observations in row-per-observation layout. A disabled block has
/// zero rows and leaves the augmented design unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct DummyObs {
    pub y_soc: DMatrix<f64>,
    pub x_soc: DMatrix<f64>,
    pub y_sur: DMatrix<f64>,
    pub x_sur: DMatrix<f64>,
}

impl DummyObs {
    pub fn none(n: usize, k: usize) -> Self {
        DummyObs {
            y_soc: DMatrix::zeros(0, n),
            x_soc: DMatrix::zeros(0, k),
            y_sur: DMatrix::zeros(0, n),
            x_sur: DMatrix::zeros(0, k),
        }
    }

    pub fn rows(&self) -> usize {
        self.y_soc.nrows() + self.y_sur.nrows()
    }

    /// All dummy rows stacked, sum-of-coefficients first.
    pub fn stacked(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.y_soc.ncols();
        let k = self.x_soc.ncols();
        let rows = self.rows();
        let mut y = DMatrix::zeros(rows, n);
        let mut x = DMatrix::zeros(rows, k);
        let r0 = self.y_soc.nrows();
        y.rows_mut(0, r0).copy_from(&self.y_soc);
        x.rows_mut(0, r0).copy_from(&self.x_soc);
        y.rows_mut(r0, self.y_sur.nrows()).copy_from(&self.y_sur);
        x.rows_mut(r0, self.x_sur.nrows()).copy_from(&self.x_sur);
        (y, x)
    }
}

/// Mean of the first `lags` observations of each variable.
pub fn initial_means(ts: &TimeSeries, lags: usize) -> Result<DVector<f64>> {
    if ts.len() < lags || lags == 0 {
        return Err(Error::TooFewObservations { observations: ts.len(), lags });
    }
    Ok(DVector::from_fn(ts.variables(), |j, _| ts.values().column(j).rows(0, lags).sum() / lags as f64))
}

pub fn dummy_obs(hyper: &MinnesotaHyper, ts: &TimeSeries, lags: usize, toggles: DummyToggles) -> Result<DummyObs> {
    let ybar = initial_means(ts, lags)?;
    dummy_obs_from_means(hyper, &ybar, lags, toggles)
}

pub fn dummy_obs_from_means(
    hyper: &MinnesotaHyper,
    ybar: &DVector<f64>,
    lags: usize,
    toggles: DummyToggles,
) -> Result<DummyObs> {
    for (name, v) in [("mu", hyper.mu), ("delta", hyper.delta)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidHyper(format!("{name} = {v}")));
        }
    }
    let n = ybar.len();
    let k = n * lags + 1;
    let mut dummies = DummyObs::none(n, k);
    if toggles.sum_of_coefficients {
        let d = DMatrix::from_diagonal(&(ybar / hyper.mu));
        let mut x = DMatrix::zeros(n, k);
        for l in 0..lags {
            x.view_mut((0, l * n), (n, n)).copy_from(&d);
        }
        dummies.y_soc = d;
        dummies.x_soc = x;
    }
    if toggles.single_unit_root {
        let row = DMatrix::from_row_slice(1, n, (ybar / hyper.delta).as_slice());
        let mut x = DMatrix::zeros(1, k);
        for l in 0..lags {
            x.view_mut((0, l * n), (1, n)).copy_from(&row);
        }
        x[(0, k - 1)] = 1.0 / hyper.delta;
        dummies.y_sur = row;
        dummies.x_sur = x;
    }
    Ok(dummies)
}
