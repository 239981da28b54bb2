//! Run configuration: a TOML file with sparse restriction lists.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use svar_signs::{
    DummyToggles, EstimateFlags, HyperPrior, NarrativeKind, NarrativeRestriction, Period, ResampleMethod,
    RestrictionSet, SamplingScheme, Sign, TimeSeries,
};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// The only seed of the run; every random stream derives from it.
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub data: DataConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub hyper: HyperConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub restrictions: RestrictionsConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeaderMode {
    #[default]
    Auto,
    Present,
    Absent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// CSV file, relative to the configuration file.
    pub path: PathBuf,
    #[serde(default)]
    pub header: HeaderMode,
    /// Label of the first row, e.g. `1955Q1`.
    pub start: Option<String>,
    /// Periods per year (1, 4 or 12).
    #[serde(default = "one")]
    pub frequency: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_lags")]
    pub lags: usize,
    /// One flag per variable; stationary variables get a zero prior mean on
    /// their own first lag. Defaults to all non-stationary.
    pub stationary: Option<Vec<bool>>,
}

fn default_lags() -> usize {
    1
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { lags: default_lags(), stationary: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "unit")]
    pub mu: f64,
    #[serde(default = "unit")]
    pub delta: f64,
    /// Per-variable scales; defaults to univariate AR residual variances.
    pub psi: Option<Vec<f64>>,
    #[serde(default = "yes")]
    pub soc: bool,
    #[serde(default = "yes")]
    pub sur: bool,
    #[serde(default)]
    pub hyper_prior: HyperPriorOverrides,
}

fn default_lambda() -> f64 {
    0.2
}

fn unit() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            lambda: default_lambda(),
            mu: 1.0,
            delta: 1.0,
            psi: None,
            soc: true,
            sur: true,
            hyper_prior: HyperPriorOverrides::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperPriorOverrides {
    pub mu_shape: Option<f64>,
    pub mu_scale: Option<f64>,
    pub delta_shape: Option<f64>,
    pub delta_scale: Option<f64>,
    pub lambda_shape: Option<f64>,
    pub lambda_scale: Option<f64>,
    pub psi_shape: Option<f64>,
    pub psi_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperConfig {
    /// Run the hyper-parameter sampler; otherwise the prior values are fixed.
    #[serde(default)]
    pub estimate: bool,
    #[serde(default = "yes")]
    pub estimate_mu: bool,
    #[serde(default = "yes")]
    pub estimate_delta: bool,
    #[serde(default = "yes")]
    pub estimate_lambda: bool,
    #[serde(default = "yes")]
    pub estimate_psi: bool,
    #[serde(default = "default_hyper_draws")]
    pub draws: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

fn default_hyper_draws() -> usize {
    15_000
}

fn default_burn_in() -> usize {
    5_000
}

impl Default for HyperConfig {
    fn default() -> Self {
        HyperConfig {
            estimate: false,
            estimate_mu: true,
            estimate_delta: true,
            estimate_lambda: true,
            estimate_psi: true,
            draws: default_hyper_draws(),
            burn_in: default_burn_in(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resampling {
    #[default]
    Stratified,
    Multinomial,
    /// Keep the accepted draws as they are and ignore the weights.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    EquationWise,
    Joint,
}

impl From<Scheme> for SamplingScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::EquationWise => SamplingScheme::EquationWise,
            Scheme::Joint => SamplingScheme::Joint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    /// Accepted structural draws to keep.
    #[serde(default = "default_draws")]
    pub draws: usize,
    /// Rotations per reduced-form draw.
    #[serde(default = "default_max_tries")]
    pub max_tries: usize,
    /// Simulations behind each narrative weight.
    #[serde(default = "default_narrative_sims")]
    pub narrative_sims: usize,
    /// Reduced-form draws to try before giving up; defaults to 10 x draws.
    pub max_reduced_form: Option<usize>,
    #[serde(default)]
    pub resample: Resampling,
    #[serde(default)]
    pub scheme: Scheme,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    pub workers: Option<usize>,
}

fn default_draws() -> usize {
    10_000
}

fn default_max_tries() -> usize {
    100
}

fn default_narrative_sims() -> usize {
    1000
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            draws: default_draws(),
            max_tries: default_max_tries(),
            narrative_sims: default_narrative_sims(),
            max_reduced_form: None,
            resample: Resampling::default(),
            scheme: Scheme::default(),
            workers: None,
        }
    }
}

impl SamplerConfig {
    pub fn budget(&self) -> usize {
        self.max_reduced_form.unwrap_or(self.draws.saturating_mul(10))
    }
}

/// Restriction entries use 1-based variable and shock indices and 0-based
/// horizons.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestrictionsConfig {
    #[serde(default)]
    pub sign_irf: Vec<SignIrfEntry>,
    #[serde(default)]
    pub sign_b: Vec<SignStructuralEntry>,
    #[serde(default)]
    pub narrative: Vec<NarrativeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignIrfEntry {
    pub variable: usize,
    pub shock: usize,
    #[serde(default)]
    pub horizon: usize,
    pub code: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignStructuralEntry {
    pub shock: usize,
    pub variable: usize,
    pub code: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NarrativeEntry {
    /// `shock-sign`, `hd-most-important`, `hd-least-important`,
    /// `hd-overwhelming` or `hd-negligible`.
    #[serde(default = "default_kind")]
    pub kind: String,
    pub shock: usize,
    /// `1` or `-1` for `shock-sign`.
    #[serde(default = "default_narrative_sign")]
    pub sign: i64,
    /// Variable of the decomposition kinds.
    pub variable: Option<usize>,
    /// Period label of the first restricted period, e.g. `1987Q4`.
    pub start: String,
    #[serde(default = "default_periods")]
    pub periods: usize,
}

fn default_kind() -> String {
    "shock-sign".into()
}

fn default_narrative_sign() -> i64 {
    1
}

fn default_periods() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    /// Coverage of the reported posterior interval.
    #[serde(default = "default_probability")]
    pub probability: f64,
    /// Also write long-format per-draw files.
    #[serde(default)]
    pub draws: bool,
    pub irf_horizon: Option<usize>,
    pub fevd_horizon: Option<usize>,
    #[serde(default)]
    pub hd: bool,
    #[serde(default)]
    pub shocks: bool,
    #[serde(default)]
    pub fitted: bool,
    /// Fitted values without the error draw.
    #[serde(default)]
    pub fitted_mean_only: bool,
    #[serde(default)]
    pub conditional_sd: bool,
    pub forecast_horizon: Option<usize>,
    pub conditional_forecast: Option<ConditionalForecastConfig>,
}

fn default_probability() -> f64 {
    0.9
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig {
            probability: default_probability(),
            draws: false,
            irf_horizon: None,
            fevd_horizon: None,
            hd: false,
            shocks: false,
            fitted: false,
            fitted_mean_only: false,
            conditional_sd: false,
            forecast_horizon: None,
            conditional_forecast: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalForecastConfig {
    pub horizon: usize,
    #[serde(default)]
    pub conditions: Vec<ConditionEntry>,
}

/// `variable` is 1-based, `step` counts periods after the sample from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionEntry {
    pub variable: usize,
    pub step: usize,
    pub value: f64,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        toml::from_str(text)
            .map_err(|e| CliError::config("config", e.message().to_string() + &span_note(text, e.span())))
    }

    /// Reads `path`; relative data and output paths are resolved against
    /// its directory.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        let mut config = RunConfig::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.data.path = base.join(&config.data.path);
        config.output_dir = base.join(&config.output_dir);
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn toggles(&self) -> DummyToggles {
        DummyToggles { sum_of_coefficients: self.prior.soc, single_unit_root: self.prior.sur }
    }

    pub fn hyper_prior(&self) -> HyperPrior {
        let o = &self.prior.hyper_prior;
        let d = HyperPrior::default();
        HyperPrior {
            mu_shape: o.mu_shape.unwrap_or(d.mu_shape),
            mu_scale: o.mu_scale.unwrap_or(d.mu_scale),
            delta_shape: o.delta_shape.unwrap_or(d.delta_shape),
            delta_scale: o.delta_scale.unwrap_or(d.delta_scale),
            lambda_shape: o.lambda_shape.unwrap_or(d.lambda_shape),
            lambda_scale: o.lambda_scale.unwrap_or(d.lambda_scale),
            psi_shape: o.psi_shape.unwrap_or(d.psi_shape),
            psi_scale: o.psi_scale.unwrap_or(d.psi_scale),
            estimate: EstimateFlags {
                mu: self.hyper.estimate_mu && self.prior.soc,
                delta: self.hyper.estimate_delta && self.prior.sur,
                lambda: self.hyper.estimate_lambda,
                psi: self.hyper.estimate_psi,
            },
        }
    }

    pub fn resample_method(&self) -> Option<ResampleMethod> {
        match self.sampler.resample {
            Resampling::Stratified => Some(ResampleMethod::Stratified),
            Resampling::Multinomial => Some(ResampleMethod::Multinomial),
            Resampling::None => None,
        }
    }

    /// Checks that do not need the data.
    pub fn validate(&self) -> Result<(), CliError> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(CliError::config(key, format!("must be positive, got {v}")))
            }
        };
        if self.model.lags == 0 {
            return Err(CliError::config("model.lags", "must be at least 1"));
        }
        positive("prior.lambda", self.prior.lambda)?;
        positive("prior.mu", self.prior.mu)?;
        positive("prior.delta", self.prior.delta)?;
        if let Some(psi) = &self.prior.psi {
            for (i, &v) in psi.iter().enumerate() {
                positive(&format!("prior.psi[{}]", i + 1), v)?;
            }
        }
        let hp = &self.prior.hyper_prior;
        for (key, v) in [
            ("mu_shape", hp.mu_shape),
            ("mu_scale", hp.mu_scale),
            ("delta_shape", hp.delta_shape),
            ("delta_scale", hp.delta_scale),
            ("lambda_shape", hp.lambda_shape),
            ("lambda_scale", hp.lambda_scale),
            ("psi_shape", hp.psi_shape),
            ("psi_scale", hp.psi_scale),
        ] {
            if let Some(v) = v {
                positive(&format!("prior.hyper_prior.{key}"), v)?;
            }
        }
        if self.hyper.estimate {
            if self.hyper.burn_in == 0 {
                return Err(CliError::config("hyper.burn_in", "must be at least 1"));
            }
            if self.hyper.draws <= self.hyper.burn_in {
                return Err(CliError::config(
                    "hyper.draws",
                    format!("must exceed burn_in = {}, got {}", self.hyper.burn_in, self.hyper.draws),
                ));
            }
            if !self.hyper_prior().estimate.any() {
                return Err(CliError::config("hyper.estimate", "no hyper-parameter group is selected"));
            }
        }
        if self.sampler.draws == 0 {
            return Err(CliError::config("sampler.draws", "must be at least 1"));
        }
        if self.sampler.max_tries == 0 {
            return Err(CliError::config("sampler.max_tries", "must be at least 1"));
        }
        if self.sampler.narrative_sims == 0 {
            return Err(CliError::config("sampler.narrative_sims", "must be at least 1"));
        }
        if self.sampler.budget() == 0 {
            return Err(CliError::config("sampler.max_reduced_form", "must be at least 1"));
        }
        if self.sampler.workers == Some(0) {
            return Err(CliError::config("sampler.workers", "must be at least 1"));
        }
        let p = self.outputs.probability;
        if !(p > 0.0 && p < 1.0) {
            return Err(CliError::config("outputs.probability", format!("must lie in (0, 1), got {p}")));
        }
        for (key, h) in [("outputs.forecast_horizon", self.outputs.forecast_horizon)] {
            if h == Some(0) {
                return Err(CliError::config(key, "must be at least 1"));
            }
        }
        if let Some(cf) = &self.outputs.conditional_forecast {
            if cf.horizon == 0 {
                return Err(CliError::config("outputs.conditional_forecast.horizon", "must be at least 1"));
            }
        }
        for (i, e) in self.restrictions.sign_irf.iter().enumerate() {
            Sign::from_code(e.code).map_err(|_| {
                CliError::config(
                    &format!("restrictions.sign_irf[{}].code", i + 1),
                    format!(
                        "{} is not a restriction code (-1, 0 or 1) in entry variable = {}, shock = {}, horizon = {}",
                        e.code, e.variable, e.shock, e.horizon
                    ),
                )
            })?;
        }
        for (i, e) in self.restrictions.sign_b.iter().enumerate() {
            let key = format!("restrictions.sign_b[{}].code", i + 1);
            match e.code {
                1 | -1 => {}
                0 => return Err(CliError::config(&key, "zero codes are only supported on impulse responses")),
                c => {
                    return Err(CliError::config(
                        &key,
                        format!(
                            "{c} is not a sign code (-1 or 1) in entry shock = {}, variable = {}",
                            e.shock, e.variable
                        ),
                    ))
                }
            }
        }
        for (i, e) in self.restrictions.narrative.iter().enumerate() {
            let key = format!("restrictions.narrative[{}]", i + 1);
            let kind = NarrativeKind::parse(&e.kind)
                .map_err(|err| CliError::config(&format!("{key}.kind"), err.to_string()))?;
            if kind == NarrativeKind::ShockSign && e.sign != 1 && e.sign != -1 {
                return Err(CliError::config(&format!("{key}.sign"), format!("{} is not 1 or -1", e.sign)));
            }
            if kind.uses_decomposition() && e.variable.is_none() {
                return Err(CliError::config(&format!("{key}.variable"), "required by decomposition restrictions"));
            }
            if e.periods == 0 {
                return Err(CliError::config(&format!("{key}.periods"), "must be at least 1"));
            }
        }
        Ok(())
    }

    /// Dense restriction set for data with `n` variables; narrative start
    /// labels are mapped onto the effective sample of `series`.
    pub fn restriction_set(&self, series: &TimeSeries) -> Result<RestrictionSet, CliError> {
        let n = series.variables();
        let lags = self.model.lags;
        let index = |key: String, value: usize, what: &str| -> Result<usize, CliError> {
            if value == 0 || value > n {
                Err(CliError::config(&key, format!("{what} {value} is outside 1..={n}")))
            } else {
                Ok(value - 1)
            }
        };
        let mut set = RestrictionSet::new(n);
        for (i, e) in self.restrictions.sign_irf.iter().enumerate() {
            let key = format!("restrictions.sign_irf[{}]", i + 1);
            let v = index(format!("{key}.variable"), e.variable, "variable")?;
            let s = index(format!("{key}.shock"), e.shock, "shock")?;
            let sign =
                Sign::from_code(e.code).map_err(|err| CliError::config(&format!("{key}.code"), err.to_string()))?;
            set.set_irf(v, s, e.horizon, sign).map_err(|err| CliError::config(&key, err.to_string()))?;
        }
        for (i, e) in self.restrictions.sign_b.iter().enumerate() {
            let key = format!("restrictions.sign_b[{}]", i + 1);
            let s = index(format!("{key}.shock"), e.shock, "shock")?;
            let v = index(format!("{key}.variable"), e.variable, "variable")?;
            let sign =
                Sign::from_code(e.code).map_err(|err| CliError::config(&format!("{key}.code"), err.to_string()))?;
            set.set_structural(s, v, sign).map_err(|err| CliError::config(&key, err.to_string()))?;
        }
        for (i, e) in self.restrictions.narrative.iter().enumerate() {
            let key = format!("restrictions.narrative[{}]", i + 1);
            let kind = NarrativeKind::parse(&e.kind)
                .map_err(|err| CliError::config(&format!("{key}.kind"), err.to_string()))?;
            let shock = index(format!("{key}.shock"), e.shock, "shock")?;
            let row = series
                .period_index(&e.start)
                .map_err(|err| CliError::config(&format!("{key}.start"), err.to_string()))?;
            if row <= lags {
                return Err(CliError::config(
                    &format!("{key}.start"),
                    format!("{} falls in the {lags} pre-sample periods used as initial lags", e.start),
                ));
            }
            let start = row - 1 - lags;
            let r = if kind == NarrativeKind::ShockSign {
                NarrativeRestriction::shock_sign(shock, e.sign as i8, start, e.periods)
            } else {
                let variable = index(format!("{key}.variable"), e.variable.unwrap_or(0), "variable")?;
                NarrativeRestriction::decomposition(kind, variable, shock, start, e.periods)
            };
            r.validate(n, series.len() - lags).map_err(|err| CliError::config(&key, err.to_string()))?;
            set.add_narrative(r).map_err(|err| CliError::config(&key, err.to_string()))?;
        }
        set.validate(series.len() - lags).map_err(|err| CliError::config("restrictions", err.to_string()))?;
        Ok(set)
    }

    /// Loads the data file with the configured header and calendar.
    pub fn load_series(&self) -> Result<TimeSeries, CliError> {
        let header = match self.data.header {
            HeaderMode::Auto => svar_signs::Header::Auto,
            HeaderMode::Present => svar_signs::Header::Present,
            HeaderMode::Absent => svar_signs::Header::Absent,
        };
        let series =
            svar_signs::load_csv(&self.data.path, header).map_err(|e| CliError::config("data.path", e.to_string()))?;
        self.with_calendar(series)
    }

    pub fn with_calendar(&self, series: TimeSeries) -> Result<TimeSeries, CliError> {
        let f = self.data.frequency;
        let start = match &self.data.start {
            Some(label) => Period::parse(label, f).map_err(|e| CliError::config("data.start", e.to_string()))?,
            None => Period::new(1, 0),
        };
        let series = series.with_calendar(start, f).map_err(|e| CliError::config("data.frequency", e.to_string()))?;
        self.check_against(&series)?;
        Ok(series)
    }

    /// Checks that need the data dimensions.
    pub fn check_against(&self, series: &TimeSeries) -> Result<(), CliError> {
        let n = series.variables();
        if series.len() <= self.model.lags + 1 {
            return Err(CliError::config(
                "model.lags",
                format!("{} observations are too few for {} lags", series.len(), self.model.lags),
            ));
        }
        if let Some(s) = &self.model.stationary {
            if s.len() != n {
                return Err(CliError::config("model.stationary", format!("has {} flags for {n} variables", s.len())));
            }
        }
        if let Some(psi) = &self.prior.psi {
            if psi.len() != n {
                return Err(CliError::config("prior.psi", format!("has {} values for {n} variables", psi.len())));
            }
        }
        if let Some(cf) = &self.outputs.conditional_forecast {
            for (i, c) in cf.conditions.iter().enumerate() {
                let key = format!("outputs.conditional_forecast.conditions[{}]", i + 1);
                if c.variable == 0 || c.variable > n {
                    return Err(CliError::config(&key, format!("variable {} is outside 1..={n}", c.variable)));
                }
                if c.step == 0 || c.step > cf.horizon {
                    return Err(CliError::config(&key, format!("step {} is outside 1..={}", c.step, cf.horizon)));
                }
            }
        }
        Ok(())
    }
}

fn span_note(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => {
            let line = text[..r.start.min(text.len())].matches('\n').count() + 1;
            format!(" (line {line})")
        }
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
[data]
path = "d.csv"
"#;

    #[test]
    fn defaults_follow_the_package_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.model.lags, 1);
        assert_eq!((c.prior.lambda, c.prior.mu, c.prior.delta), (0.2, 1.0, 1.0));
        assert!(c.prior.soc && c.prior.sur);
        assert!(!c.hyper.estimate);
        assert_eq!((c.hyper.draws, c.hyper.burn_in), (15_000, 5_000));
        assert_eq!((c.sampler.draws, c.sampler.max_tries, c.sampler.narrative_sims), (10_000, 100, 1000));
        assert_eq!(c.sampler.budget(), 100_000);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = RunConfig::parse(&format!("{MINIMAL}\n[model]\nlag = 2\n")).unwrap_err();
        assert!(err.to_string().contains("lag"), "{err}");
    }

    #[test]
    fn bad_sign_code_names_the_entry() {
        let text = format!("{MINIMAL}\n[[restrictions.sign_irf]]\nvariable = 1\nshock = 1\ncode = 2\n");
        let err = RunConfig::parse(&text).unwrap().validate().unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("restrictions.sign_irf[1].code"), "{err}");
    }

    #[test]
    fn narrative_start_maps_to_effective_sample() {
        let text = format!(
            "{MINIMAL}\n[model]\nlags = 2\n[[restrictions.narrative]]\nshock = 1\nsign = -1\nstart = \"2001Q2\"\n"
        );
        let mut c = RunConfig::parse(&text).unwrap();
        c.data.start = Some("2000Q1".into());
        c.data.frequency = 4;
        let ts = c
            .with_calendar(TimeSeries::from_values(nalgebra::DMatrix::from_fn(12, 2, |i, j| (i * j) as f64)).unwrap())
            .unwrap();
        let set = c.restriction_set(&ts).unwrap();
        // 2001Q2 is row 6; with 2 lags the effective sample starts at row 3.
        assert_eq!(set.narrative()[0].start, 3);
        assert_eq!(set.narrative()[0].sign, -1);
    }

    #[test]
    fn out_of_sample_narrative_period_is_a_config_error() {
        let text = format!("{MINIMAL}\n[[restrictions.narrative]]\nshock = 1\nstart = \"2008Q3\"\n");
        let mut c = RunConfig::parse(&text).unwrap();
        c.data.start = Some("2000Q1".into());
        c.data.frequency = 4;
        let ts = c
            .with_calendar(TimeSeries::from_values(nalgebra::DMatrix::from_fn(12, 2, |i, j| (i + j) as f64)).unwrap())
            .unwrap();
        let err = c.restriction_set(&ts).unwrap_err();
        assert!(err.to_string().contains("restrictions.narrative[1].start"), "{err}");
    }

    #[test]
    fn out_of_range_indices_are_config_errors() {
        let text = format!("{MINIMAL}\n[[restrictions.sign_irf]]\nvariable = 3\nshock = 1\ncode = 1\n");
        let c = RunConfig::parse(&text).unwrap();
        let ts = TimeSeries::from_values(nalgebra::DMatrix::from_fn(12, 2, |i, j| (i + j) as f64)).unwrap();
        let err = c.restriction_set(&ts).unwrap_err();
        assert!(err.to_string().contains("restrictions.sign_irf[1].variable"), "{err}");
    }

    #[test]
    fn round_trips_through_toml() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
    }
}
