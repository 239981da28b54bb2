use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use svar_signs_cli::{replicate_optimism, run, CliError, RunConfig, RunOptions, RunReport};

/// Bayesian structural VARs identified with sign, zero and narrative restrictions.
#[derive(Debug, Parser)]
#[command(name = "svar-signs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Suppress progress messages.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the pipeline described by a configuration file.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` of the configuration.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Check a configuration and its data without sampling.
    Validate { config: PathBuf },
    /// Run the bundled optimism-shock example into a directory.
    ReplicateOptimism { outdir: PathBuf },
}

fn interrupt_flag() -> Arc<AtomicBool> {
    let flag = Arc::new(AtomicBool::new(false));
    let handler_flag = flag.clone();
    let _ = ctrlc::set_handler(move || {
        if handler_flag.swap(true, Ordering::SeqCst) {
            std::process::exit(130);
        }
        eprintln!("interrupt received: stopping after the current batch (press again to abort)");
    });
    flag
}

fn report(r: &RunReport) {
    let m = &r.manifest;
    eprintln!(
        "retained {} of {} draws, acceptance rate {:.4}, ess {:.1}, {:.1} s; outputs in {}",
        m.draws_retained,
        m.draws_requested,
        m.acceptance_rate,
        m.ess,
        m.runtime_seconds,
        r.output_dir.display()
    );
}

fn validate(path: &std::path::Path) -> Result<(), CliError> {
    let config = RunConfig::load(path)?;
    config.validate()?;
    let series = config.load_series()?;
    let set = config.restriction_set(&series)?;
    println!(
        "ok: {} variables, {} observations ({} to {}), {} lags, {} narrative restrictions",
        series.variables(),
        series.len(),
        series.start().label(series.frequency()),
        series.end().label(series.frequency()),
        config.model.lags,
        set.narrative().len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let options = RunOptions { workers: cli.workers, progress: !cli.quiet, cancel: None };
    let result: Result<Option<RunReport>, CliError> = match &cli.command {
        Command::Run { config, output } => RunConfig::load(config).and_then(|mut c| {
            if let Some(o) = output {
                c.output_dir = o.clone();
            }
            run(&c, &RunOptions { cancel: Some(interrupt_flag()), ..options.clone() }).map(Some)
        }),
        Command::Validate { config } => validate(config).map(|_| None),
        Command::ReplicateOptimism { outdir } => {
            replicate_optimism(outdir, &RunOptions { cancel: Some(interrupt_flag()), ..options.clone() }).map(Some)
        }
    };
    match result {
        Ok(r) => {
            if let (false, Some(r)) = (cli.quiet, r.as_ref()) {
                report(r);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
