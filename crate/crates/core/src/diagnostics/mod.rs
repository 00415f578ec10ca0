//! Large-scale regularity functionals: excess, Gram non-degeneracy, minimal radius,
//! growth profiles, gradient averages and mean-value ratios.

mod excess;
mod regime;
mod scales;

pub use excess::{
    excess, excess_decay_experiment, gram_matrix, harmonic_quadratic, quadratic_field, ExcessDecay, ExcessReport,
};
pub use regime::{g_weight, growth_reference, mu, Regime};
pub use scales::{
    centered_oscillation, energy_profile, gradient_average, gradient_average_torus, growth_profile, mean_value_ratio,
    minimal_radius, oscillation_profile, spread_centers, EnergyProfile, GradientAverage, GrowthProfile,
    MinimalRadiusReport,
};
