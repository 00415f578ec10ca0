use serde::{Deserialize, Serialize};

use crate::corrector::{compute_corrector, compute_flux_and_ahom};
use crate::elliptic::{solve_scalar, SolveOptions, SolveReport};
use crate::error::{Error, Result};
use crate::lattice::{grad, CoefficientField, Grid, ScalarField};

/// Default macroscopic data `prod_i sin(2 pi y_i / N)`.
pub fn sine_data(grid: Grid) -> ScalarField {
    let n = grid.side_length();
    let d = grid.dim();
    ScalarField::from_fn(grid, |y| (0..d).map(|i| (2.0 * std::f64::consts::PI * y[i] / n).sin()).product())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoScaleError {
    /// `||grad u - grad u_hom - d_i u_hom grad phi_i|| / (N ||grad grad u_hom||)`.
    pub error: f64,
    pub error_norm: f64,
    pub hessian_norm: f64,
    pub a_hom: Vec<f64>,
    pub report: SolveReport,
}

/// Two-scale error of `-div(a grad u) = f` on the torus against the homogenized
/// solution corrected by `phi`.
pub fn twoscale_error(a: &CoefficientField, f: &ScalarField, opts: &SolveOptions) -> Result<TwoScaleError> {
    let grid = a.grid();
    if f.grid() != grid {
        return Err(Error::ShapeMismatch("data and coefficient on different grids".into()));
    }
    let d = grid.dim();
    let (phi, reports) = compute_corrector(a, opts)?;
    let (_, ahom) = compute_flux_and_ahom(a, &phi)?;
    let sym = nalgebra::DMatrix::from_fn(d, d, |i, j| 0.5 * (ahom.get(i, j) + ahom.get(j, i)));
    let eig = sym.symmetric_eigenvalues();
    if !(eig.min() > 1e-8 * eig.max().abs().max(1e-300)) {
        return Err(Error::InvalidParameter(format!("homogenized tensor ill-conditioned (eigenvalues {eig:?})")));
    }
    let (u, rep) = solve_scalar(a, f, 0.0, opts, None)?;
    rep.check()?;
    let a0 = CoefficientField::constant(grid, &ahom.matrix);
    let (u_hom, rep_hom) = solve_scalar(&a0, f, 0.0, opts, None)?;
    rep_hom.check()?;
    let gu = grad(&u);
    let gh = grad(&u_hom);
    let gphi: Vec<_> = phi.iter().map(grad).collect();
    let mut err2 = 0.0;
    for m in 0..d {
        for x in 0..grid.len() {
            let mut e = gu.component(m)[x] - gh.component(m)[x];
            for (i, gp) in gphi.iter().enumerate() {
                e -= gh.component(i)[x] * gp.component(m)[x];
            }
            err2 += e * e;
        }
    }
    let mut hess2 = 0.0;
    for j in 0..d {
        let hj = grad(&ScalarField::from_vec(grid, gh.component(j).to_vec())?);
        hess2 += hj.inner(&hj);
    }
    let error_norm = err2.sqrt();
    let hessian_norm = hess2.sqrt();
    let report = reports.into_iter().fold(rep.merge(rep_hom), SolveReport::merge);
    Ok(TwoScaleError {
        error: error_norm / (grid.side_length() * hessian_norm),
        error_norm,
        hessian_norm,
        a_hom: ahom.matrix,
        report,
    })
}
