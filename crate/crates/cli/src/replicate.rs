//! The bundled optimism-shock replication.

use std::path::Path;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::write_atomic;
use crate::pipeline::{run, RunOptions, RunReport};

/// Quarterly productivity, stock prices, consumption, real interest rate
/// and hours worked, 1955Q1 to 2004Q4.
pub const OPTIMISM_CSV: &str = include_str!("../data/optimism.csv");

/// Four lags, hyper-parameters estimated, 10,000 draws. The optimism shock
/// (shock 1) has no impact effect on productivity, raises stock prices on
/// impact and was negative in the 1987Q4 crash.
pub const OPTIMISM_CONFIG: &str = r#"seed = 123
output_dir = "."

[data]
path = "optimism.csv"
start = "1955Q1"
frequency = 4

[model]
lags = 4

[hyper]
estimate = true
draws = 15000
burn_in = 5000

[sampler]
draws = 10000

[[restrictions.sign_irf]]
variable = 1
shock = 1
horizon = 0
code = 0

[[restrictions.sign_irf]]
variable = 2
shock = 1
horizon = 0
code = 1

[[restrictions.narrative]]
kind = "shock-sign"
shock = 1
sign = -1
start = "1987Q4"
periods = 1

[outputs]
probability = 0.9
irf_horizon = 20
fevd_horizon = 20
forecast_horizon = 8
"#;

/// Writes the bundled data and configuration into `dir` and runs them.
pub fn replicate_optimism(dir: &Path, options: &RunOptions) -> Result<RunReport, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })?;
    write_atomic(&dir.join("optimism.csv"), OPTIMISM_CSV.as_bytes())?;
    write_atomic(&dir.join("config.toml"), OPTIMISM_CONFIG.as_bytes())?;
    run(&RunConfig::load(&dir.join("config.toml"))?, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_is_valid_for_bundled_data() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("optimism.csv"), OPTIMISM_CSV).unwrap();
        std::fs::write(dir.path().join("config.toml"), OPTIMISM_CONFIG).unwrap();
        let config = RunConfig::load(&dir.path().join("config.toml")).unwrap();
        config.validate().unwrap();
        let series = config.load_series().unwrap();
        assert_eq!((series.len(), series.variables()), (200, 5));
        assert_eq!(series.end().label(4), "2004Q4");
        let set = config.restriction_set(&series).unwrap();
        assert_eq!(set.narrative()[0].start, 131 - 4);
    }
}
