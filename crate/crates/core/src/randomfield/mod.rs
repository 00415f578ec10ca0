//! Stationary Gaussian fields with algebraic covariance decay, and the
//! pointwise transform into admissible coefficient fields.

mod coefficients;
mod covariance;
mod gaussian;

pub use coefficients::{skew_generator, to_coefficients, CoefficientModel, Coefficients};
pub use covariance::{empirical_covariance, CovarianceProfile};
pub use gaussian::{kernel, sample_gaussian, CovarianceSpec, GaussianSampler, SeedSpec};

use crate::error::Result;
use crate::lattice::Grid;

/// Draw one coefficient realization: `g_sym` then (if `nu > 0`) `g_skew` from the same stream.
pub fn sample_coefficients(
    grid: Grid,
    cov: &CovarianceSpec,
    model: &CoefficientModel,
    seed: SeedSpec,
) -> Result<Coefficients> {
    let sampler = GaussianSampler::new(cov, grid)?;
    let mut rng = seed.rng();
    let g_sym = sampler.sample_with(&mut rng);
    let g_skew = (model.skew_amplitude > 0.0).then(|| sampler.sample_with(&mut rng));
    to_coefficients(&g_sym, g_skew.as_ref(), model)
}
