//! Periodic lattice, difference calculus, spectral solves and ball averages.

mod ball;
mod calculus;
mod field;
mod grid;
pub mod io;
pub mod spectral;

pub use ball::{ball_average, ball_average_vector, box_mollify, Ball};
pub use calculus::{backward_diff, div, forward_diff, grad, inner, laplacian, torus_mean_of_grad};
pub use field::{pair_index, skew_pairs, CoefficientField, ScalarField, SkewTensorField, VectorField};
pub use grid::Grid;
pub use spectral::{massive_poisson_solve, poisson_solve, Spectral};
