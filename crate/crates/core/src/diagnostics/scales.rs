use serde::{Deserialize, Serialize};

use super::excess::local_diff;
use super::regime::{growth_reference, Regime};
use crate::corrector::CorrectorSet;
use crate::error::{Error, Result};
use crate::lattice::{torus_mean_of_grad, Ball, Grid, ScalarField, VectorField};

/// Sum over all components of `(phi, sigma)` of the centered second moment on `ball`.
/// Each stored `sigma_ijk` (`j < k`) counts twice, once for `(j, k)` and once for `(k, j)`.
pub fn centered_oscillation(corr: &CorrectorSet, ball: &Ball) -> f64 {
    let cells = ball.cells();
    let n = cells.len() as f64;
    let moment = |comp: &[f64]| {
        let mean = cells.iter().map(|&c| comp[c]).sum::<f64>() / n;
        cells.iter().map(|&c| (comp[c] - mean).powi(2)).sum::<f64>() / n
    };
    let phi: f64 = corr.phi.iter().map(|p| moment(p.data())).sum();
    let sigma: f64 = corr.sigma.components().iter().map(|c| moment(c)).sum();
    phi + 2.0 * sigma
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalRadiusReport {
    /// Smallest admissible dyadic radius, `f64::INFINITY` if none.
    pub r_star: f64,
    pub delta: f64,
    pub center: usize,
    pub radii: Vec<f64>,
    /// `(1/R^2) avg_{B_R} |(phi, sigma) - avg_{B_R}(phi, sigma)|^2` for each radius.
    pub values: Vec<f64>,
}

impl MinimalRadiusReport {
    /// Same profile, different threshold.
    pub fn with_delta(&self, delta: f64) -> Self {
        Self { r_star: r_star_from(&self.radii, &self.values, delta), delta, ..self.clone() }
    }
}

fn r_star_from(radii: &[f64], values: &[f64], delta: f64) -> f64 {
    let mut r_star = f64::INFINITY;
    for (r, v) in radii.iter().zip(values).rev() {
        if *v <= delta {
            r_star = *r;
        } else {
            break;
        }
    }
    r_star
}

/// Normalized oscillation profile on the dyadic radii `1, 2, ..., <= L/8` around `center`.
pub fn oscillation_profile(corr: &CorrectorSet, center: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = corr.grid();
    let radii = grid.dyadic_radii();
    let values = radii
        .iter()
        .map(|&r| Ok(centered_oscillation(corr, &Ball::new(grid, center, r)?) / (r * r)))
        .collect::<Result<Vec<_>>>()?;
    Ok((radii, values))
}

/// `r_*` at `center`: the smallest dyadic `r` with the normalized oscillation `<= delta`
/// on every dyadic `R` in `[r, L/8]`.
pub fn minimal_radius(corr: &CorrectorSet, delta: f64, center: usize) -> Result<MinimalRadiusReport> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be positive")));
    }
    let (radii, values) = oscillation_profile(corr, center)?;
    Ok(MinimalRadiusReport { r_star: r_star_from(&radii, &values, delta), delta, center, radii, values })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    pub radii: Vec<f64>,
    /// Centered ball variance of `(phi, sigma)`, averaged over the centers.
    pub values: Vec<f64>,
    pub centers: usize,
    pub regime: Regime,
    /// `G_{d,beta}(R)^2`, the shape `values` should follow up to constants.
    pub reference: Vec<f64>,
}

/// `count` centers on a regular sub-lattice (`4 x 4` in 2d, `4 x 2 x 2` in 3d for 16).
pub fn spread_centers(grid: Grid, count: usize) -> Vec<usize> {
    let d = grid.dim();
    let mut per_axis = vec![1usize; d];
    let mut k = 0;
    while per_axis.iter().product::<usize>() < count {
        per_axis[k % d] *= 2;
        k += 1;
    }
    let n = grid.n();
    let total: usize = per_axis.iter().product();
    (0..total)
        .map(|t| {
            let mut c = [0usize; 3];
            let mut rem = t;
            for axis in (0..d).rev() {
                let m = per_axis[axis];
                c[axis] = (rem % m) * n / m;
                rem /= m;
            }
            grid.index(&c)
        })
        .take(count)
        .collect()
}

pub fn growth_profile(corr: &CorrectorSet, radii: &[f64], centers: &[usize], beta: f64) -> Result<GrowthProfile> {
    let grid = corr.grid();
    if centers.len() < 16 {
        return Err(Error::InvalidParameter(format!("growth profile needs at least 16 centers, got {}", centers.len())));
    }
    let cap = grid.side_length() / 8.0;
    let mut values = Vec::new();
    for &r in radii {
        if r > cap {
            return Err(Error::BallRadius { radius: r, max: cap });
        }
        let ball = Ball::new(grid, centers[0], r)?;
        let s: f64 = centers.iter().map(|&c| centered_oscillation(corr, &ball.recentered(c))).sum();
        values.push(s / centers.len() as f64);
    }
    let d = grid.dim();
    Ok(GrowthProfile {
        radii: radii.to_vec(),
        values,
        centers: centers.len(),
        regime: Regime::classify(d, beta),
        reference: radii.iter().map(|&r| growth_reference(d, beta, r)).collect(),
    })
}

/// `m . avg_B grad(phi_i)` and `m . avg_B grad(sigma_ijk)` (stored `j < k`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientAverage {
    pub phi: Vec<f64>,
    pub sigma: Vec<f64>,
}

fn directional_average(grid: &Grid, u: &[f64], m: &[f64], cells: &[usize]) -> f64 {
    let s: f64 = cells
        .iter()
        .map(|&c| (0..grid.dim()).map(|axis| m[axis] * local_diff(grid, u, c, axis)).sum::<f64>())
        .sum();
    s / cells.len() as f64
}

fn check_direction(grid: &Grid, m: &[f64]) -> Result<()> {
    let norm: f64 = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    if m.len() != grid.dim() || (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter("averaging direction must be a unit vector".into()));
    }
    Ok(())
}

/// Averages of `grad(phi, sigma)` against the constant unit field `m` on `B_r(center)`, `r <= L/8`.
pub fn gradient_average(corr: &CorrectorSet, m: &[f64], radius: f64, center: usize) -> Result<GradientAverage> {
    let grid = corr.grid();
    check_direction(&grid, m)?;
    let cap = grid.side_length() / 8.0;
    if radius > cap {
        return Err(Error::BallRadius { radius, max: cap });
    }
    let cells = Ball::new(grid, center, radius)?.cells();
    Ok(GradientAverage {
        phi: corr.phi.iter().map(|p| directional_average(&grid, p.data(), m, &cells)).collect(),
        sigma: corr.sigma.components().iter().map(|s| directional_average(&grid, s, m, &cells)).collect(),
    })
}

/// Same quantity over the whole torus; every entry is exactly zero.
pub fn gradient_average_torus(corr: &CorrectorSet, m: &[f64]) -> Result<GradientAverage> {
    let grid = corr.grid();
    check_direction(&grid, m)?;
    let project = |u: &ScalarField| torus_mean_of_grad(u).iter().zip(m).map(|(g, mi)| g * mi).sum::<f64>();
    let sigma = corr
        .sigma
        .components()
        .iter()
        .map(|s| Ok(project(&ScalarField::from_vec(grid, s.clone())?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GradientAverage { phi: corr.phi.iter().map(project).collect(), sigma })
}

/// `avg_{B_r} |grad u|^2 / avg_{B_R} |grad u|^2` for concentric balls, `r <= R`.
pub fn mean_value_ratio(grad_u: &VectorField, small: &Ball, big: &Ball) -> Result<f64> {
    if small.center() != big.center() || small.radius() > big.radius() {
        return Err(Error::InvalidParameter("mean-value ratio needs concentric balls with r <= R".into()));
    }
    if grad_u.grid() != big.grid() || small.grid() != big.grid() {
        return Err(Error::ShapeMismatch("gradient and balls on different grids".into()));
    }
    let avg = |b: &Ball| {
        let cells = b.cells();
        cells.iter().map(|&c| grad_u.at(c).iter().map(|x| x * x).sum::<f64>()).sum::<f64>() / cells.len() as f64
    };
    let denom = avg(big);
    if denom == 0.0 {
        return Err(Error::InvalidParameter("gradient vanishes on the large ball".into()));
    }
    Ok(avg(small) / denom)
}

/// `avg_{B_r} |e_i + grad phi_i|^2` along `radii` and the doubling ratios `E(2r)/E(r)`
/// for consecutive radii that double.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub radii: Vec<f64>,
    pub energy: Vec<f64>,
    pub doubling: Vec<f64>,
}

pub fn energy_profile(corr: &CorrectorSet, i: usize, center: usize, radii: &[f64]) -> Result<EnergyProfile> {
    let grid = corr.grid();
    if i >= corr.dim() {
        return Err(Error::InvalidParameter(format!("direction {i} out of range")));
    }
    let d = grid.dim();
    let energy = radii
        .iter()
        .map(|&r| {
            let cells = Ball::new(grid, center, r)?.cells();
            let s: f64 = cells
                .iter()
                .map(|&c| {
                    (0..d)
                        .map(|axis| {
                            let v = local_diff(&grid, corr.phi[i].data(), c, axis) + if axis == i { 1.0 } else { 0.0 };
                            v * v
                        })
                        .sum::<f64>()
                })
                .sum();
            Ok(s / cells.len() as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    let doubling = radii
        .windows(2)
        .zip(energy.windows(2))
        .filter(|(r, _)| (r[1] - 2.0 * r[0]).abs() < 1e-12)
        .map(|(_, e)| e[1] / e[0])
        .collect();
    Ok(EnergyProfile { radii: radii.to_vec(), energy, doubling })
}
