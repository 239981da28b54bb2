//! Structural and predictive quantities computed from posterior draws.

pub mod decomposition;
pub mod irf;
pub mod predictive;
pub mod summary;

pub use decomposition::{historical_decomposition, residuals, structural_shocks, HistoricalDecomposition};
pub use irf::{impulse_responses, ma_coefficients, variance_decomposition, Responses};
pub use predictive::{
    conditional_forecast, conditional_sd, fitted_draws, fitted_values, forecast, AsReduced, Condition, ForecastDraws,
};
pub use summary::{summarize, Summary};
