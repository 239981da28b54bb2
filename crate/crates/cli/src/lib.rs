//! Front end for `svar_signs`: a TOML run configuration, the estimation
//! pipeline and CSV/JSON outputs.

pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod replicate;

pub use config::RunConfig;
pub use error::CliError;
pub use pipeline::{run, run_series, Manifest, RunOptions, RunReport};
pub use replicate::{replicate_optimism, OPTIMISM_CONFIG, OPTIMISM_CSV};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
