use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}: expected {expected} columns, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },

    #[error("row {row}, column {column}: cannot parse {cell:?} as a finite number")]
    NonNumericCell { row: usize, column: usize, cell: String },

    #[error("invalid time series: {0}")]
    InvalidSeries(String),

    #[error("invalid period label {0:?}")]
    InvalidPeriod(String),

    #[error("period {label} is outside the sample {first}..={last}")]
    PeriodOutOfRange { label: String, first: String, last: String },

    #[error("need more than {lags} observations for a VAR({lags}), got {observations}")]
    TooFewObservations { observations: usize, lags: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid hyper-parameter: {0}")]
    InvalidHyper(String),

    #[error("{what} is not positive definite")]
    NotPositiveDefinite { what: &'static str },

    #[error("degenerate univariate regression for variable {variable}: {reason}")]
    DegenerateRegression { variable: usize, reason: &'static str },

    #[error("log target is not finite at the initial value")]
    NonFiniteTarget,

    #[error("no hyper-parameter group selected for estimation")]
    NothingToEstimate,

    #[error("invalid sampler setting: {0}")]
    InvalidSetting(String),

    #[error("invalid restriction: {0}")]
    InvalidRestriction(String),

    #[error("zero restrictions on shock {shock} are infeasible: {zeros} zeros leave no room after {preceding} earlier shocks (N = {n})")]
    InfeasibleZeros { shock: usize, zeros: usize, preceding: usize, n: usize },

    #[error("zero restrictions on shock {shock} are linearly dependent")]
    RankDeficient { shock: usize },

    #[error("no draw satisfied the restrictions ({reduced_form} reduced-form draws, {rotations} rotations tried)")]
    NoAcceptedDraws { reduced_form: usize, rotations: usize },

    #[error("all importance weights are zero")]
    ZeroWeights,

    #[error("invalid forecast condition: {0}")]
    InvalidCondition(String),

    #[error("empty draw set")]
    EmptyDraws,

    #[error("total variance of variable {variable} is zero")]
    ZeroVariance { variable: usize },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::DegenerateRegression { .. }
                | Error::NonFiniteTarget
                | Error::RankDeficient { .. }
                | Error::ZeroWeights
                | Error::ZeroVariance { .. }
        )
    }
}
