use crate::elliptic::{solve_divform, SolveOptions, SolveReport};
use crate::error::{Error, Result};
use crate::lattice::{box_mollify, grad, Ball, CoefficientField, ScalarField, SkewTensorField, VectorField};

use super::{flux, solve_sigma};

/// Correctors with massive term `1/T`, their fluxes and the fluxes averaged on scale `sqrt(T)`.
#[derive(Clone, Debug)]
pub struct ModifiedCorrectorSet {
    pub t: f64,
    pub phi_t: Vec<ScalarField>,
    pub q_t: Vec<VectorField>,
    pub sigma_t: SkewTensorField,
    pub q_t_moll: Vec<VectorField>,
    pub reports: Vec<SolveReport>,
}

pub fn compute_modified(a: &CoefficientField, t: f64, opts: &SolveOptions) -> Result<ModifiedCorrectorSet> {
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("cut-off T = {t} must be >= 1")));
    }
    let grid = a.grid();
    let scale = t.sqrt();
    if scale > grid.side_length() / 4.0 {
        return Err(Error::InvalidParameter(format!("sqrt(T) = {scale} exceeds L/4")));
    }
    let mut phi_t = Vec::new();
    let mut q_t = Vec::new();
    let mut reports = Vec::new();
    for i in 0..a.dim() {
        let (p, rep) = solve_divform(a, &a.column(i), 1.0 / t, opts)?;
        rep.check()?;
        q_t.push(flux(a, &p, i));
        phi_t.push(p);
        reports.push(rep);
    }
    let sigma_t = solve_sigma(&q_t, 1.0 / t);
    let q_t_moll = q_t
        .iter()
        .map(|q| {
            let comps = q
                .components()
                .iter()
                .map(|c| Ok(box_mollify(&ScalarField::from_vec(grid, c.clone())?, scale)?.into_vec()))
                .collect::<Result<Vec<_>>>()?;
            VectorField::from_components(grid, comps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModifiedCorrectorSet { t, phi_t, q_t, sigma_t, q_t_moll, reports })
}

impl ModifiedCorrectorSet {
    /// `avg |grad phi_T,i + e_i|^2` per direction.
    pub fn energies(&self) -> Vec<f64> {
        self.phi_t
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut g = grad(p);
                g.component_mut(i).iter_mut().for_each(|v| *v += 1.0);
                g.inner(&g) / p.grid().len() as f64
            })
            .collect()
    }

    /// The two pieces of `F^2` on `ball`: `(1/T) avg |(phi_T, sigma_T)|^2` and the
    /// centered second moment of the averaged flux.
    pub fn f_rt_terms(&self, ball: &Ball) -> (f64, f64) {
        let cells = ball.cells();
        let n = cells.len() as f64;
        let d = self.phi_t.len();
        let mut potential = 0.0;
        for &c in &cells {
            for i in 0..d {
                potential += self.phi_t[i].data()[c].powi(2);
                for j in 0..d {
                    for k in j + 1..d {
                        potential += 2.0 * self.sigma_t.upper(i, j, k)[c].powi(2);
                    }
                }
            }
        }
        potential /= n * self.t;
        let mut fluct = 0.0;
        for q in &self.q_t_moll {
            for comp in q.components() {
                let mean = cells.iter().map(|&c| comp[c]).sum::<f64>() / n;
                fluct += cells.iter().map(|&c| (comp[c] - mean).powi(2)).sum::<f64>() / n;
            }
        }
        (potential, fluct)
    }
}

/// `F_{R,T}` on `ball` (radius `R`), requiring `sqrt(T) <= R <= L/4`.
pub fn compute_f_rt(m: &ModifiedCorrectorSet, ball: &Ball) -> Result<f64> {
    let r = ball.radius();
    if r < m.t.sqrt() {
        return Err(Error::InvalidParameter(format!("R = {r} below sqrt(T) = {}", m.t.sqrt())));
    }
    if ball.grid() != m.phi_t[0].grid() {
        return Err(Error::ShapeMismatch("ball and corrector on different grids".into()));
    }
    let (p, f) = m.f_rt_terms(ball);
    Ok((p + f).sqrt())
}
