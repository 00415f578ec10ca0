use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Grid, ScalarField, Spectral};
use crate::par;

/// Covariance `c(r) ~ (1 + r)^-gamma` together with the coarseness label it feeds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub gamma: f64,
    pub beta_target: f64,
}

const BETA_MARGIN: f64 = 0.01;

impl CovarianceSpec {
    /// Spec with `beta_target = beta_eff(gamma, dim)`.
    pub fn new(gamma: f64, dim: usize) -> Result<Self> {
        Self::with_beta(gamma, Self::beta_eff(gamma, dim), dim)
    }

    pub fn with_beta(gamma: f64, beta_target: f64, dim: usize) -> Result<Self> {
        let s = Self { gamma, beta_target };
        s.validate(dim)?;
        Ok(s)
    }

    /// `max(0, 1 - gamma/d + margin)`; zero means the integrable (short-range) regime.
    pub fn beta_eff(gamma: f64, dim: usize) -> f64 {
        (1.0 - gamma / dim as f64 + BETA_MARGIN).max(0.0)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma = {} must be positive", self.gamma)));
        }
        if !(0.0..1.0).contains(&self.beta_target) {
            return Err(Error::InvalidParameter(format!("beta = {} outside [0, 1)", self.beta_target)));
        }
        let bound = dim as f64 * (1.0 - self.beta_target);
        if !(self.gamma > bound) {
            return Err(Error::InvalidParameter(format!(
                "gamma = {} must exceed d(1 - beta) = {bound}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Master seed plus realization index; each pair owns an independent ChaCha stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master: u64,
    pub index: u64,
}

impl SeedSpec {
    pub fn new(master: u64, index: u64) -> Self {
        Self { master, index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.index);
        rng
    }
}

/// Generalized Cauchy kernel `(1 + r^2)^(-gamma/2)`; `gamma = inf` is white noise.
pub fn kernel(gamma: f64, r: f64) -> f64 {
    if gamma.is_infinite() {
        return if r == 0.0 { 1.0 } else { 0.0 };
    }
    (1.0 + r * r).powf(-gamma / 2.0)
}

/// Circulant-embedding sampler: white noise filtered by the square root of the
/// (clamped) torus spectrum of the kernel, with the zero mode removed.
pub struct GaussianSampler {
    grid: Grid,
    amplitude: Arc<Amplitude>,
}

struct Amplitude {
    sqrt_spectrum: Vec<f64>,
    deficit: f64,
}

type AmplitudeKey = (Grid, u64);

fn amplitude_cache() -> &'static Mutex<HashMap<AmplitudeKey, Arc<Amplitude>>> {
    static CACHE: OnceLock<Mutex<HashMap<AmplitudeKey, Arc<Amplitude>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl GaussianSampler {
    pub fn new(spec: &CovarianceSpec, grid: Grid) -> Result<Self> {
        if !(spec.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma = {} must be positive", spec.gamma)));
        }
        let key = (grid, spec.gamma.to_bits());
        if let Some(a) = amplitude_cache().lock().unwrap().get(&key) {
            return Ok(Self { grid, amplitude: a.clone() });
        }
        let amplitude = Arc::new(Self::build_amplitude(spec.gamma, grid));
        amplitude_cache().lock().unwrap().insert(key, amplitude.clone());
        Ok(Self { grid, amplitude })
    }

    fn build_amplitude(gamma: f64, grid: Grid) -> Amplitude {
        let sp = Spectral::for_grid(grid);
        let mut buf = vec![Complex64::default(); grid.len()];
        par::zip_map(&mut buf, |idx| {
            let x = grid.position(idx);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            Complex64::new(kernel(gamma, r), 0.0)
        });
        sp.forward(&mut buf);
        let mut spectrum: Vec<f64> = buf.iter().map(|v| v.re.max(0.0)).collect();
        let zero = spectrum[0];
        spectrum[0] = 0.0;
        let variance = spectrum.iter().sum::<f64>() / grid.len() as f64;
        Amplitude {
            sqrt_spectrum: spectrum.iter().map(|s| (s / variance).sqrt()).collect(),
            deficit: zero / grid.len() as f64 / variance,
        }
    }

    /// Torus mean of the normalized kernel: the amount by which nulling the
    /// zero mode lowers the covariance at every lag.
    pub fn zero_mode_deficit(&self) -> f64 {
        self.amplitude.deficit
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn sample(&self, seed: SeedSpec) -> ScalarField {
        self.sample_with(&mut seed.rng())
    }

    /// Draws `N^d` standard normals from `rng` and returns a unit-variance, exactly mean-zero field.
    pub fn sample_with<R: Rng>(&self, rng: &mut R) -> ScalarField {
        let grid = self.grid;
        let mut buf: Vec<Complex64> =
            (0..grid.len()).map(|_| Complex64::new(rng.sample(StandardNormal), 0.0)).collect();
        let sp = Spectral::for_grid(grid);
        sp.forward(&mut buf);
        let amp = &self.amplitude.sqrt_spectrum;
        par::for_each_chunk_mut(&mut buf, 4096, |c, chunk| {
            for (k, v) in chunk.iter_mut().enumerate() {
                *v *= amp[c * 4096 + k];
            }
        });
        sp.inverse(&mut buf);
        ScalarField::from_vec(grid, buf.iter().map(|v| v.re).collect()).expect("grid-sized buffer")
    }
}

pub fn sample_gaussian(spec: &CovarianceSpec, grid: Grid, seed: SeedSpec) -> Result<ScalarField> {
    spec.validate(grid.dim())?;
    Ok(GaussianSampler::new(spec, grid)?.sample(seed))
}
