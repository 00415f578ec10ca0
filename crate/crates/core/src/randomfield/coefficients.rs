use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CoefficientField, ScalarField};

/// Ellipticity `lambda` and skew amplitude `nu` of the Gaussian-CDF transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientModel {
    pub lambda: f64,
    pub skew_amplitude: f64,
}

impl CoefficientModel {
    pub fn new(lambda: f64, skew_amplitude: f64) -> Result<Self> {
        let m = Self { lambda, skew_amplitude };
        m.validate()?;
        Ok(m)
    }

    pub fn nu_max(&self) -> f64 {
        (1.0 - self.lambda) / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::InvalidParameter(format!("lambda = {} outside (0, 1)", self.lambda)));
        }
        if !(self.skew_amplitude >= 0.0 && self.skew_amplitude <= self.nu_max()) {
            return Err(Error::SkewAmplitude { nu: self.skew_amplitude, max: self.nu_max() });
        }
        Ok(())
    }

    /// Operator-norm rescale `1 / sqrt(1 + nu^2)`.
    pub fn rescale(&self) -> f64 {
        1.0 / (1.0 + self.skew_amplitude * self.skew_amplitude).sqrt()
    }

    /// Ellipticity after the rescale.
    pub fn lambda_eff(&self) -> f64 {
        self.lambda * self.rescale()
    }
}

/// Coefficient field with the guaranteed ellipticity after rescaling.
#[derive(Clone, Debug)]
pub struct Coefficients {
    pub field: CoefficientField,
    pub lambda_eff: f64,
}

/// Unit skew matrix: rotation generator in 2D, generator about `e_3` in 3D.
pub fn skew_generator(dim: usize) -> [f64; 9] {
    let mut j = [0.0; 9];
    j[1] = -1.0;
    j[dim] = 1.0;
    j
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn to_coefficients(g_sym: &ScalarField, g_skew: Option<&ScalarField>, model: &CoefficientModel) -> Result<Coefficients> {
    model.validate()?;
    let grid = g_sym.grid();
    if let Some(s) = g_skew {
        if s.grid() != grid {
            return Err(Error::ShapeMismatch("g_sym and g_skew on different grids".into()));
        }
    }
    let d = grid.dim();
    let scale = model.rescale();
    let jm = skew_generator(d);
    let mut entries = vec![vec![0.0; grid.len()]; d * d];
    for idx in 0..grid.len() {
        let s = model.lambda + (1.0 - model.lambda) * std_normal_cdf(g_sym.data()[idx]);
        let t = match g_skew {
            Some(f) if model.skew_amplitude > 0.0 => model.skew_amplitude * (2.0 * std_normal_cdf(f.data()[idx]) - 1.0),
            _ => 0.0,
        };
        for m in 0..d {
            for n in 0..d {
                let id = if m == n { s } else { 0.0 };
                entries[m * d + n][idx] = scale * (id + t * jm[m * d + n]);
            }
        }
    }
    Ok(Coefficients { field: CoefficientField::from_entries(grid, entries)?, lambda_eff: model.lambda_eff() })
}
