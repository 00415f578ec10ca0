//! Numerical lab for stochastic homogenization on a periodic lattice.

pub mod corrector;
pub mod diagnostics;
pub mod elliptic;
pub mod ensemble;
pub mod error;
pub mod lattice;
pub mod par;
pub mod partition;
pub mod randomfield;
pub mod sensitivity;

pub use error::{Error, Result};
