//! Shared fixtures for the benchmarks.

use nalgebra::DVector;
use svar_signs::linalg::standard_normal_matrix;
use svar_signs::rng::{stream, Purpose};
use svar_signs::{
    build_design, sample_niw, DesignMatrices, DummyToggles, HyperModel, HyperPrior, MinnesotaHyper,
    NarrativeRestriction, NiwPosterior, ReducedFormDraw, RestrictionSet, SamplingScheme, Sign, TimeSeries,
};

pub const VARIABLES: usize = 5;
pub const LAGS: usize = 4;
pub const PERIODS: usize = 200;

pub struct Fixture {
    pub design: DesignMatrices,
    pub posterior: NiwPosterior,
    pub draws: Vec<ReducedFormDraw>,
    pub restrictions: RestrictionSet,
}

/// A persistent five-variable random walk with a zero, a sign and a
/// narrative restriction on the first shock.
pub fn fixture(draws: usize) -> Fixture {
    let shocks = standard_normal_matrix(PERIODS, VARIABLES, &mut stream(1, Purpose::Haar, 0));
    let mut levels = shocks.clone();
    for t in 1..PERIODS {
        let prev = levels.row(t - 1).into_owned();
        levels.row_mut(t).zip_apply(&prev, |v, p| *v = 0.9 * p + 0.1 * *v);
    }
    let series = TimeSeries::from_values(levels).expect("series");
    let design = build_design(&series, LAGS).expect("design");
    let model = HyperModel::new(&series, LAGS, vec![false; VARIABLES], DummyToggles::default(), HyperPrior::default())
        .expect("model");
    let psi = DVector::from_element(VARIABLES, 0.01);
    let posterior = model.posterior(&MinnesotaHyper::with_psi(psi).expect("hyper")).expect("posterior");
    let draws = sample_niw(&posterior, draws, 2, SamplingScheme::EquationWise).expect("draws");
    let mut restrictions = RestrictionSet::new(VARIABLES);
    restrictions.set_irf(0, 0, 0, Sign::Zero).expect("zero");
    restrictions.set_irf(1, 0, 0, Sign::Positive).expect("sign");
    restrictions.add_narrative(NarrativeRestriction::shock_sign(0, 1, 100, 1)).expect("narrative");
    Fixture { design, posterior, draws, restrictions }
}
