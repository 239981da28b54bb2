//! Bayesian structural vector autoregressions identified with sign, zero and
//! narrative restrictions.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! 1. [`data`]: load a [`TimeSeries`] and build the lagged design.
//! 2. [`priors`] and [`hyper`]: Minnesota prior with dummy observations and
//!    adaptive Metropolis sampling of its hyper-parameters.
//! 3. [`posterior`]: conjugate normal-inverse-Wishart update and independent
//!    draws of the reduced form.
//! 4. [`identification`]: rotations satisfying the restrictions, importance
//!    weights and resampling.
//! 5. [`analysis`]: impulse responses, decompositions, shocks, fitted values
//!    and forecasts.

pub mod analysis;
pub mod data;
pub mod error;
pub mod hyper;
pub mod identification;
pub mod linalg;
pub mod posterior;
pub mod priors;
pub mod rng;

pub use data::{build_design, companion, load_csv, read_csv, DesignMatrices, Header, Period, TimeSeries};
pub use error::{Error, Result};
pub use hyper::{adaptive_rwmh, estimate_hyper, log_marginal_likelihood, HyperDraws, HyperModel};
pub use identification::{
    identify, identify_monitored, identify_until, AcceptanceStats, IdentifySettings, NarrativeKind,
    NarrativeRestriction, ResampleMethod, RestrictionSet, Sign, StructuralDraw, WeightedStructuralSample,
};
pub use posterior::{niw_update, sample_niw, NiwPosterior, ReducedFormDraw, SamplingScheme};
pub use priors::{
    default_psi, dummy_obs, log_hyperprior, minnesota_niw, DummyObs, DummyToggles, EstimateFlags, HyperPrior,
    MinnesotaHyper, NiwPrior,
};

/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
