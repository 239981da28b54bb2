//! The run: hyper-parameters, posterior sampling, identification, outputs.

use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use svar_signs::analysis::decomposition::contributions_at;
use svar_signs::analysis::{
    conditional_forecast, conditional_sd, fitted_draws, forecast, impulse_responses, structural_shocks,
    variance_decomposition, Condition, ForecastDraws,
};
use svar_signs::posterior::{paired_hyper_index, CrossProducts, PosteriorFactors};
use svar_signs::rng::{stream, Purpose};
use svar_signs::{
    build_design, default_psi, estimate_hyper, identify_monitored, AcceptanceStats, DesignMatrices, HyperDraws,
    HyperModel, IdentifySettings, MinnesotaHyper, ReducedFormDraw, SamplingScheme, StructuralDraw, TimeSeries,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, write_atomic, AtomicCsv, Block, Cell, TableWriter};

/// Reduced-form draws identified between progress reports and checkpoints.
pub const CHECKPOINT_EVERY: usize = 1000;

const HD_CHUNK: usize = 16;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `sampler.workers`.
    pub workers: Option<usize>,
    /// Report progress on standard error.
    pub progress: bool,
    /// When set, identification stops after the current batch and the run
    /// finishes with the draws accepted so far.
    pub cancel: Option<Arc<AtomicBool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimensions {
    pub variables: usize,
    pub lags: usize,
    pub regressors: usize,
    /// Rows of the effective sample.
    pub observations: usize,
    pub dummy_rows: usize,
    /// Rows seen by the posterior update.
    pub augmented_rows: usize,
    pub sum_of_coefficients: bool,
    pub single_unit_root: bool,
    /// Whether the augmented cross-products equal those of the sample alone.
    pub augmented_equals_raw: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperReport {
    pub draws: usize,
    pub burn_in: usize,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub draws_requested: usize,
    pub draws_retained: usize,
    /// Accepted draws per rotation tried.
    pub acceptance_rate: f64,
    pub ess: f64,
    pub runtime_seconds: f64,
    pub module_versions: BTreeMap<String, String>,
    pub interrupted: bool,
    pub reduced_form_draws: usize,
    pub rotations: usize,
    pub resampling: String,
    pub hyper: Option<HyperReport>,
    pub dimensions: Dimensions,
    pub variables: Vec<String>,
    pub timings: BTreeMap<String, f64>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: Manifest,
    pub output_dir: PathBuf,
}

/// Loads the data named by `config` and runs it.
pub fn run(config: &RunConfig, options: &RunOptions) -> Result<RunReport, CliError> {
    config.validate()?;
    let series = config.load_series()?;
    run_series(config, series, options)
}

/// Runs `config` on already loaded data.
pub fn run_series(config: &RunConfig, series: TimeSeries, options: &RunOptions) -> Result<RunReport, CliError> {
    config.validate()?;
    config.check_against(&series)?;
    match options.workers.or(config.sampler.workers) {
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::config("sampler.workers", e.to_string()))?
            .install(|| execute(config, &series, options)),
        None => execute(config, &series, options),
    }
}

/// Source of reduced-form draw `s`, integrating over hyper draws if any.
enum Source {
    Fixed(PosteriorFactors),
    Mixture { model: HyperModel, hypers: Vec<MinnesotaHyper> },
}

impl Source {
    fn draw(&self, s: usize, count: usize, seed: u64, scheme: SamplingScheme) -> svar_signs::Result<ReducedFormDraw> {
        let mut rng = stream(seed, Purpose::Posterior, s as u64);
        match self {
            Source::Fixed(f) => f.sample(scheme, &mut rng),
            Source::Mixture { model, hypers } => {
                let h = &hypers[paired_hyper_index(s % count, count, hypers.len())];
                PosteriorFactors::new(&model.posterior(h)?)?.sample(scheme, &mut rng)
            }
        }
    }
}

fn execute(config: &RunConfig, series: &TimeSeries, options: &RunOptions) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let mut timings = BTreeMap::new();
    let lags = config.model.lags;
    let n = series.variables();
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Write { path: dir.clone(), source })?;
    let restrictions = config.restriction_set(series)?;
    let design = build_design(series, lags)?;

    let psi = match &config.prior.psi {
        Some(p) => nalgebra::DVector::from_column_slice(p),
        None => default_psi(series, lags)?,
    };
    let init = MinnesotaHyper::new(config.prior.mu, config.prior.delta, config.prior.lambda, psi)
        .map_err(|e| CliError::config("prior", e.to_string()))?;
    let stationary = config.model.stationary.clone().unwrap_or_else(|| vec![false; n]);
    let model = HyperModel::new(series, lags, stationary, config.toggles(), config.hyper_prior())?;
    let dimensions = dimensions(config, &design, &model, &init)?;

    let mut files = Vec::new();
    let mut hyper_report = None;
    let t = Instant::now();
    let source = if config.hyper.estimate {
        let draws = estimate_hyper(&model, &init, config.hyper.draws, config.hyper.burn_in, config.seed)?;
        write_hyper_trace(&dir, &draws)?;
        files.push("hyper_trace.csv".to_string());
        hyper_report = Some(HyperReport {
            draws: config.hyper.draws,
            burn_in: config.hyper.burn_in,
            acceptance_rate: draws.acceptance_rate,
        });
        if options.progress {
            eprintln!(
                "hyper-parameters: {} draws kept, acceptance rate {:.3}",
                draws.draws.len(),
                draws.acceptance_rate
            );
        }
        Source::Mixture { model, hypers: draws.draws }
    } else {
        Source::Fixed(PosteriorFactors::new(&model.posterior(&init)?)?)
    };
    timings.insert("hyper".to_string(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let target = config.sampler.draws;
    let scheme: SamplingScheme = config.sampler.scheme.into();
    let settings = IdentifySettings {
        max_tries: config.sampler.max_tries,
        narrative_sims: config.sampler.narrative_sims,
        seed: config.seed,
    };
    let mut interrupted = false;
    let checkpoint = dir.join("checkpoint.json");
    let sample = identify_monitored(
        |s| source.draw(s, target, config.seed, scheme),
        target,
        config.sampler.budget(),
        &design,
        &restrictions,
        &settings,
        CHECKPOINT_EVERY,
        |stats| {
            if options.progress {
                eprintln!(
                    "identification: {} reduced-form draws, {} accepted of {target}",
                    stats.reduced_form, stats.accepted
                );
            }
            let _ = write_checkpoint(&checkpoint, stats, target);
            if options.cancel.as_ref().is_some_and(|c| c.load(Ordering::SeqCst)) {
                interrupted = true;
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        },
    )?;
    let _ = std::fs::remove_file(&checkpoint);
    if interrupted && options.progress {
        eprintln!("interrupted: finishing with {} accepted draws", sample.draws.len());
    }
    timings.insert("identification".to_string(), t.elapsed().as_secs_f64());

    let mut weights = AtomicCsv::create(&dir.join("weights.csv"), &["draw", "weight"])?;
    for (i, w) in sample.weights.iter().enumerate() {
        weights.row([(i + 1).to_string(), num(*w)])?;
    }
    weights.commit()?;
    files.push("weights.csv".to_string());

    let t = Instant::now();
    let retained = sample.draws.len();
    let draws = match config.resample_method() {
        Some(method) => sample.resample(retained, method, config.seed)?,
        None => sample.draws.clone(),
    };
    files.extend(write_outputs(config, series, &design, &draws, &dir)?);
    timings.insert("outputs".to_string(), t.elapsed().as_secs_f64());

    let mut module_versions = BTreeMap::new();
    module_versions.insert("svar-signs".to_string(), svar_signs::VERSION.to_string());
    module_versions.insert("svar-signs-cli".to_string(), crate::VERSION.to_string());
    let resampling = serde_json::to_value(config.sampler.resample)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    files.push("manifest.json".to_string());
    let manifest = Manifest {
        seed: config.seed,
        draws_requested: target,
        draws_retained: retained,
        acceptance_rate: sample.stats.rate(),
        ess: sample.ess,
        runtime_seconds: started.elapsed().as_secs_f64(),
        module_versions,
        interrupted,
        reduced_form_draws: sample.stats.reduced_form,
        rotations: sample.stats.rotations,
        resampling,
        hyper: hyper_report,
        dimensions,
        variables: series.names().to_vec(),
        timings,
        files,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(&dir.join("manifest.json"), json.as_bytes())?;
    Ok(RunReport { manifest, output_dir: dir })
}

fn dimensions(
    config: &RunConfig,
    design: &DesignMatrices,
    model: &HyperModel,
    init: &MinnesotaHyper,
) -> Result<Dimensions, CliError> {
    let dummy_rows = model.dummies(init)?.rows();
    let raw = CrossProducts::of_design(design);
    Ok(Dimensions {
        variables: design.variables(),
        lags: design.lags,
        regressors: design.regressors(),
        observations: design.observations(),
        dummy_rows,
        augmented_rows: design.observations() + dummy_rows,
        sum_of_coefficients: config.prior.soc,
        single_unit_root: config.prior.sur,
        augmented_equals_raw: model.augmented(init)? == raw,
    })
}

fn write_checkpoint(path: &Path, stats: &AcceptanceStats, target: usize) -> Result<(), CliError> {
    let json = serde_json::json!({
        "target": target,
        "reduced_form_draws": stats.reduced_form,
        "rotations": stats.rotations,
        "accepted": stats.accepted,
    });
    write_atomic(path, json.to_string().as_bytes())
}

fn write_hyper_trace(dir: &Path, draws: &HyperDraws) -> Result<(), CliError> {
    let mut header = vec!["iteration".to_string()];
    header.extend(draws.names());
    header.push("log_posterior".to_string());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = AtomicCsv::create(&dir.join("hyper_trace.csv"), &header)?;
    let m = draws.matrix();
    for (r, lp) in draws.log_posterior.iter().enumerate() {
        let mut row = vec![(r + 1).to_string()];
        row.extend(m.row(r).iter().map(|v| num(*v)));
        row.push(num(*lp));
        w.row(row)?;
    }
    w.commit()
}

/// Labels of the effective-sample periods.
fn period_labels(series: &TimeSeries, lags: usize) -> Vec<String> {
    (lags..series.len()).map(|r| series.period(r).label(series.frequency())).collect()
}

fn response_cells(n: usize, horizon: usize) -> Vec<Cell> {
    let mut cells = Vec::with_capacity(n * n * (horizon + 1));
    for i in 0..n {
        for j in 0..n {
            for h in 0..=horizon {
                cells.push(Cell { variable: Some(i), shock: Some(j), index: h.to_string() });
            }
        }
    }
    cells
}

fn flatten_responses(r: &[DMatrix<f64>]) -> Vec<f64> {
    let n = r[0].nrows();
    let mut v = Vec::with_capacity(n * n * r.len());
    for i in 0..n {
        for j in 0..n {
            v.extend(r.iter().map(|m| m[(i, j)]));
        }
    }
    v
}

fn path_block(paths: &ForecastDraws, n: usize) -> Block {
    let horizon = paths.paths.first().map_or(0, |p| p.nrows());
    let cells = (0..n)
        .flat_map(|i| (1..=horizon).map(move |h| Cell { variable: Some(i), shock: None, index: h.to_string() }))
        .collect();
    let values = paths.paths.iter().map(|p| p.as_slice().to_vec()).collect();
    Block { cells, values }
}

fn write_outputs(
    config: &RunConfig,
    series: &TimeSeries,
    design: &DesignMatrices,
    draws: &[StructuralDraw],
    dir: &Path,
) -> Result<Vec<String>, CliError> {
    let out = &config.outputs;
    let n = design.variables();
    let lags = design.lags;
    let p = out.probability;
    let mut files = Vec::new();
    let table = |stem: &str, index: &str, block: &Block| -> Result<Vec<String>, CliError> {
        let mut t = TableWriter::create(dir, stem, index, p, out.draws)?;
        t.write(block)?;
        t.commit()
    };

    if let Some(h) = out.irf_horizon {
        let block = Block::compute(response_cells(n, h), draws, |d| {
            Ok(flatten_responses(&impulse_responses(&d.reduced.a, lags, &d.impact, h)))
        })?;
        files.extend(table("irf", "horizon", &block)?);
    }
    if let Some(h) = out.fevd_horizon {
        let block = Block::compute(response_cells(n, h), draws, |d| {
            Ok(flatten_responses(&variance_decomposition(&impulse_responses(&d.reduced.a, lags, &d.impact, h))?))
        })?;
        files.extend(table("fevd", "horizon", &block)?);
    }
    let periods = period_labels(series, lags);
    if out.hd {
        let mut contributions = TableWriter::create(dir, "hd", "period", p, out.draws)?;
        let mut remainder = TableWriter::create(dir, "hd_remainder", "period", p, out.draws)?;
        for t0 in (0..periods.len()).step_by(HD_CHUNK) {
            let t1 = (t0 + HD_CHUNK).min(periods.len());
            let mut cells = Vec::new();
            let mut rest_cells = Vec::new();
            for label in &periods[t0..t1] {
                for i in 0..n {
                    for j in 0..n {
                        cells.push(Cell { variable: Some(i), shock: Some(j), index: label.clone() });
                    }
                    rest_cells.push(Cell { variable: Some(i), shock: None, index: label.clone() });
                }
            }
            let all: Vec<Cell> = cells.iter().chain(&rest_cells).cloned().collect();
            let both = Block::compute(all, draws, |d| {
                let shocks = structural_shocks(d, design)?;
                let theta = impulse_responses(&d.reduced.a, lags, &d.impact, t1 - 1);
                let mut v = Vec::with_capacity((t1 - t0) * n * (n + 1));
                let mut rest = Vec::with_capacity((t1 - t0) * n);
                for t in t0..t1 {
                    let h = contributions_at(&theta, &shocks, t);
                    for i in 0..n {
                        v.extend(h.row(i).iter());
                        rest.push(design.y[(t, i)] - h.row(i).sum());
                    }
                }
                v.extend(rest);
                Ok(v)
            })?;
            let split = cells.len();
            let (c_vals, r_vals): (Vec<Vec<f64>>, Vec<Vec<f64>>) =
                both.values.into_iter().map(|mut v| (v.drain(..split).collect(), v)).unzip();
            contributions.write(&Block { cells, values: c_vals })?;
            remainder.write(&Block { cells: rest_cells, values: r_vals })?;
        }
        files.extend(contributions.commit()?);
        files.extend(remainder.commit()?);
    }
    if out.shocks {
        let cells = periods
            .iter()
            .flat_map(|l| (0..n).map(move |j| Cell { variable: None, shock: Some(j), index: l.clone() }))
            .collect();
        let block = Block::compute(cells, draws, |d| {
            let e = structural_shocks(d, design)?;
            Ok(e.transpose().as_slice().to_vec())
        })?;
        files.extend(table("shocks", "period", &block)?);
    }
    if out.fitted {
        let fitted = fitted_draws(draws, design, out.fitted_mean_only, config.seed)?;
        let cells = periods
            .iter()
            .flat_map(|l| (0..n).map(move |i| Cell { variable: Some(i), shock: None, index: l.clone() }))
            .collect();
        let values = fitted.iter().map(|f| f.transpose().as_slice().to_vec()).collect();
        files.extend(table("fitted", "period", &Block { cells, values })?);
    }
    if out.conditional_sd {
        let cells = (0..n).map(|i| Cell { variable: Some(i), shock: None, index: String::new() }).collect();
        let block = Block::compute(cells, draws, |d| Ok(conditional_sd(&d.reduced.sigma).as_slice().to_vec()))?;
        files.extend(table("conditional_sd", "horizon", &block)?);
    }
    if let Some(h) = out.forecast_horizon {
        let paths = forecast(draws, design, h, config.seed)?;
        files.extend(table("forecast", "horizon", &path_block(&paths, n))?);
    }
    if let Some(cf) = &out.conditional_forecast {
        let conditions: Vec<Condition> = cf
            .conditions
            .iter()
            .map(|c| Condition { variable: c.variable - 1, step: c.step, value: c.value })
            .collect();
        let paths = conditional_forecast(draws, design, cf.horizon, &conditions, config.seed).map_err(|e| match e {
            svar_signs::Error::InvalidCondition(m) => CliError::config("outputs.conditional_forecast", m),
            other => other.into(),
        })?;
        files.extend(table("conditional_forecast", "horizon", &path_block(&paths, n))?);
    }
    Ok(files)
}
