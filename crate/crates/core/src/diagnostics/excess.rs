use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corrector::CorrectorSet;
use crate::elliptic::{solve_dirichlet_ball, SolveOptions, SolveReport};
use crate::ensemble::fit::{fit_power_law, FitResult};
use crate::error::{Error, Result};
use crate::lattice::{grad, Ball, CoefficientField, Grid, ScalarField, VectorField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcessReport {
    pub radius: f64,
    pub excess: f64,
    pub xi: Vec<f64>,
    /// Row-major `G_ij = avg_B (e_i + grad phi_i).(e_j + grad phi_j)`.
    pub gram: Vec<f64>,
    /// Ascending.
    pub gram_eigenvalues: Vec<f64>,
}

/// Forward difference of `u` along `axis` at one cell.
pub(crate) fn local_diff(grid: &Grid, u: &[f64], cell: usize, axis: usize) -> f64 {
    let mut off = [0i64; 3];
    off[axis] = 1;
    u[grid.offset(cell, &off)] - u[cell]
}

/// `e_i + grad phi_i` on the ball cells, indexed `[i][cell][component]`.
fn harmonic_gradients(corr: &CorrectorSet, cells: &[usize]) -> Vec<Vec<[f64; 3]>> {
    let grid = corr.grid();
    let d = grid.dim();
    (0..d)
        .map(|i| {
            cells
                .iter()
                .map(|&c| {
                    let mut v = [0.0; 3];
                    for (axis, slot) in v.iter_mut().enumerate().take(d) {
                        *slot = local_diff(&grid, corr.phi[i].data(), c, axis) + if axis == i { 1.0 } else { 0.0 };
                    }
                    v
                })
                .collect()
        })
        .collect()
}

fn symmetric_eigenvalues(d: usize, m: &[f64]) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(DMatrix::from_row_slice(d, d, m)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Gram matrix of the `a`-linear gradients on `ball` with its ascending eigenvalues.
pub fn gram_matrix(corr: &CorrectorSet, ball: &Ball) -> Result<(Vec<f64>, Vec<f64>)> {
    if ball.grid() != corr.grid() {
        return Err(Error::ShapeMismatch("ball and corrector on different grids".into()));
    }
    let d = corr.dim();
    let cells = ball.cells();
    let h = harmonic_gradients(corr, &cells);
    let n = cells.len() as f64;
    let mut g = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let s: f64 = (0..cells.len()).map(|c| (0..d).map(|m| h[i][c][m] * h[j][c][m]).sum::<f64>()).sum();
            g[i * d + j] = s / n;
            g[j * d + i] = s / n;
        }
    }
    let ev = symmetric_eigenvalues(d, &g);
    Ok((g, ev))
}

/// Squared distance on `ball` from `grad u` to the closest `xi + grad phi_xi`.
pub fn excess(grad_u: &VectorField, corr: &CorrectorSet, ball: &Ball) -> Result<ExcessReport> {
    let grid = corr.grid();
    if grad_u.grid() != grid || ball.grid() != grid {
        return Err(Error::ShapeMismatch("gradient, corrector and ball on different grids".into()));
    }
    let d = grid.dim();
    let cells = ball.cells();
    let n = cells.len() as f64;
    let h = harmonic_gradients(corr, &cells);
    let (gram, ev) = gram_matrix(corr, ball)?;
    let max = ev[d - 1];
    if !(ev[0] > 1e-10 * max) {
        return Err(Error::DegenerateGram(ev[0]));
    }
    let gu: Vec<[f64; 3]> = cells.iter().map(|&c| grad_u.at(c)).collect();
    let b: Vec<f64> = (0..d)
        .map(|i| (0..cells.len()).map(|c| (0..d).map(|m| gu[c][m] * h[i][c][m]).sum::<f64>()).sum::<f64>() / n)
        .collect();
    let energy = gu.iter().map(|v| v[..d].iter().map(|x| x * x).sum::<f64>()).sum::<f64>() / n;
    let gm = DMatrix::from_row_slice(d, d, &gram);
    let xi = gm
        .cholesky()
        .ok_or(Error::DegenerateGram(ev[0]))?
        .solve(&DVector::from_column_slice(&b));
    let xi: Vec<f64> = xi.iter().copied().collect();
    let fit: f64 = xi.iter().zip(&b).map(|(x, y)| x * y).sum();
    Ok(ExcessReport { radius: ball.radius(), excess: (energy - fit).max(0.0), xi, gram, gram_eigenvalues: ev })
}

/// Random symmetric `H` with `tr(A_sym H) = 0`, so `x.Hx` is `A`-harmonic.
pub fn harmonic_quadratic<R: Rng>(a_hom: &[f64], dim: usize, rng: &mut R) -> Vec<f64> {
    let mut h = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let v: f64 = rng.sample(StandardNormal);
            h[i * dim + j] = v;
            h[j * dim + i] = v;
        }
    }
    let sym: Vec<f64> = (0..dim * dim).map(|k| 0.5 * (a_hom[k] + a_hom[(k % dim) * dim + k / dim])).collect();
    let tr: f64 = sym.iter().zip(&h).map(|(s, x)| s * x).sum();
    let ss: f64 = sym.iter().map(|s| s * s).sum();
    for (x, s) in h.iter_mut().zip(&sym) {
        *x -= tr / ss * s;
    }
    h
}

/// `(x - c).H(x - c)` with `x - c` the minimal-image displacement from `center`.
pub fn quadratic_field(grid: Grid, center: usize, h: &[f64]) -> ScalarField {
    let d = grid.dim();
    let c = grid.coords(center);
    let data = (0..grid.len())
        .map(|idx| {
            let x = grid.displacement(&c, &grid.coords(idx));
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += x[i] * h[i * d + j] * x[j];
                }
            }
            s
        })
        .collect();
    ScalarField::from_vec(grid, data).expect("grid-sized data")
}

/// Excess table of an `a`-harmonic function on `B_R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcessDecay {
    pub big_radius: f64,
    pub radii: Vec<f64>,
    pub excess: Vec<f64>,
    /// `Exc(r) / Exc(R)`.
    pub ratios: Vec<f64>,
    /// Power-law fit of `Exc(r)`; its slope estimates `2 alpha`. `None` if fewer than two positive entries.
    pub fit: Option<FitResult>,
    pub report: SolveReport,
}

/// Solves `div(a grad u) = 0` on `B_R(center)` with boundary data `x.Hx` and tabulates
/// `Exc(r)` for `r` in `radii`.
pub fn excess_decay_experiment(
    a: &CoefficientField,
    corr: &CorrectorSet,
    ball: &Ball,
    h: &[f64],
    radii: &[f64],
    opts: &SolveOptions,
) -> Result<ExcessDecay> {
    let grid = a.grid();
    let boundary = quadratic_field(grid, ball.center(), h);
    let (u, report) = solve_dirichlet_ball(a, ball, &boundary, opts)?;
    report.check()?;
    let g = grad(&u);
    let big = excess(&g, corr, ball)?.excess;
    let mut excess_vals = Vec::new();
    for &r in radii {
        if r > ball.radius() {
            return Err(Error::BallRadius { radius: r, max: ball.radius() });
        }
        excess_vals.push(excess(&g, corr, &Ball::new(grid, ball.center(), r)?)?.excess);
    }
    let ratios = excess_vals.iter().map(|e| if big > 0.0 { e / big } else { 0.0 }).collect();
    let pairs: Vec<(f64, f64)> = radii.iter().copied().zip(excess_vals.iter().copied()).filter(|p| p.1 > 0.0).collect();
    let fit = if pairs.len() >= 2 { Some(fit_power_law(&pairs)?) } else { None };
    Ok(ExcessDecay { big_radius: ball.radius(), radii: radii.to_vec(), excess: excess_vals, ratios, fit, report })
}
