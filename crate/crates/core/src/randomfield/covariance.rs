use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{ScalarField, Spectral};

/// Radial covariance along the lattice axes, `r = 0 .. N/2`.
#[derive(Clone, Debug, Serialize)]
pub struct CovarianceProfile {
    pub r: Vec<f64>,
    pub c: Vec<f64>,
    /// Standard error across samples.
    pub stderr: Vec<f64>,
}

/// Per-sample autocorrelation along every axis direction via `|F u|^2`,
/// averaged over cells, axes and samples.
pub fn empirical_covariance(samples: &[ScalarField]) -> Result<CovarianceProfile> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("empirical covariance needs at least 2 samples".into()));
    }
    let grid = samples[0].grid();
    if samples.iter().any(|s| s.grid() != grid) {
        return Err(Error::ShapeMismatch("samples on different grids".into()));
    }
    let sp = Spectral::for_grid(grid);
    let half = grid.n() / 2;
    let per_sample: Vec<Vec<f64>> = samples
        .iter()
        .map(|u| {
            let mut buf: Vec<Complex64> = u.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
            sp.forward(&mut buf);
            buf.iter_mut().for_each(|v| *v = Complex64::new(v.norm_sqr(), 0.0));
            sp.inverse(&mut buf);
            let len = grid.len() as f64;
            (0..=half)
                .map(|r| {
                    let mut s = 0.0;
                    for axis in 0..grid.dim() {
                        let mut c = [0usize; 3];
                        c[axis] = r;
                        s += buf[grid.index(&c)].re;
                    }
                    s / (len * grid.dim() as f64)
                })
                .collect()
        })
        .collect();
    let m = samples.len() as f64;
    let mut c = vec![0.0; half + 1];
    let mut stderr = vec![0.0; half + 1];
    for r in 0..=half {
        let mean = per_sample.iter().map(|p| p[r]).sum::<f64>() / m;
        let var = per_sample.iter().map(|p| (p[r] - mean).powi(2)).sum::<f64>() / (m - 1.0);
        c[r] = mean;
        stderr[r] = (var / m).sqrt();
    }
    Ok(CovarianceProfile { r: (0..=half).map(|r| r as f64).collect(), c, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Grid;
    use crate::randomfield::{CovarianceSpec, GaussianSampler, SeedSpec};

    #[test]
    fn lag_zero_is_the_empirical_variance() {
        let g = Grid::new(2, 16).unwrap();
        let spec = CovarianceSpec::new(2.0, 2).unwrap();
        let s = GaussianSampler::new(&spec, g).unwrap();
        let samples: Vec<_> = (0..3).map(|i| s.sample(SeedSpec::new(5, i))).collect();
        let p = empirical_covariance(&samples).unwrap();
        let direct = samples.iter().map(|u| u.data().iter().map(|v| v * v).sum::<f64>() / g.len() as f64).sum::<f64>() / 3.0;
        assert!((p.c[0] - direct).abs() < 1e-12);
        assert!(empirical_covariance(&samples[..1]).is_err());
    }

    #[test]
    fn white_noise_decorrelates() {
        let g = Grid::new(2, 32).unwrap();
        let spec = CovarianceSpec { gamma: f64::INFINITY, beta_target: 0.0 };
        let s = GaussianSampler::new(&spec, g).unwrap();
        let samples: Vec<_> = (0..200).map(|i| s.sample(SeedSpec::new(9, i))).collect();
        let p = empirical_covariance(&samples).unwrap();
        // removing the zero mode leaves c(r) = -1/(N^d - 1) off the diagonal
        let bias = -1.0 / (g.len() as f64 - 1.0);
        for r in 2..=16 {
            assert!((p.c[r] - bias).abs() < 3.0 * p.stderr[r], "r = {r}: {} +- {}", p.c[r], p.stderr[r]);
        }
    }
}
