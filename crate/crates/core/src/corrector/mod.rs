//! Correctors `phi_i`, fluxes `q_i`, the homogenized tensor and flux correctors
//! `sigma_ijk`, plus their massive (cut-off `T`) versions.

mod modified;
mod persist;

pub use modified::{compute_f_rt, compute_modified, ModifiedCorrectorSet};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::elliptic::{solve_divform, SolveOptions, SolveReport};
use crate::error::{Error, Result};
use crate::lattice::{forward_diff, grad, CoefficientField, Grid, ScalarField, SkewTensorField, Spectral, VectorField};
use crate::par;

/// `a_hom` (row-major) with its measured ellipticity and operator norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogenizedTensor {
    pub dim: usize,
    pub matrix: Vec<f64>,
    /// Smallest eigenvalue of the symmetric part.
    pub ellipticity: f64,
    pub operator_norm: f64,
}

impl HomogenizedTensor {
    pub fn new(dim: usize, matrix: Vec<f64>) -> Self {
        let m = DMatrix::from_row_slice(dim, dim, &matrix);
        let sym = (&m + m.transpose()) * 0.5;
        let ellipticity = SymmetricEigen::new(sym).eigenvalues.min();
        let operator_norm = m.singular_values().max();
        Self { dim, matrix, ellipticity, operator_norm }
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.matrix[m * self.dim + n]
    }

    pub fn transposed(&self) -> Vec<f64> {
        let d = self.dim;
        (0..d * d).map(|k| self.matrix[(k % d) * d + k / d]).collect()
    }
}

#[derive(Clone, Debug)]
pub struct CorrectorSet {
    pub phi: Vec<ScalarField>,
    pub q: Vec<VectorField>,
    pub a_hom: HomogenizedTensor,
    pub sigma: SkewTensorField,
    pub reports: Vec<SolveReport>,
}

impl CorrectorSet {
    pub fn compute(a: &CoefficientField, opts: &SolveOptions) -> Result<Self> {
        let (phi, reports) = compute_corrector(a, opts)?;
        let (q, a_hom) = compute_flux_and_ahom(a, &phi)?;
        let sigma = compute_sigma(&q)?;
        Ok(Self { phi, q, a_hom, sigma, reports })
    }

    pub fn grid(&self) -> Grid {
        self.phi[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.phi.len()
    }

    /// `avg |grad phi_i|^2` for each direction.
    pub fn energies(&self) -> Vec<f64> {
        self.phi
            .iter()
            .map(|p| {
                let g = grad(p);
                g.inner(&g) / p.grid().len() as f64
            })
            .collect()
    }

    /// `|| div sigma_i - q_i || / || q_i ||` per direction.
    pub fn sigma_identity_residuals(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| div_sigma_residual(&self.sigma, &self.q[i], i)).collect()
    }
}

/// `phi_i` with `-div(a (grad phi_i + e_i)) = 0`, zero mean. Non-convergence is an error.
pub fn compute_corrector(a: &CoefficientField, opts: &SolveOptions) -> Result<(Vec<ScalarField>, Vec<SolveReport>)> {
    let mut phi = Vec::new();
    let mut reports = Vec::new();
    for i in 0..a.dim() {
        let (p, rep) = solve_divform(a, &a.column(i), 0.0, opts)?;
        rep.check()?;
        phi.push(p);
        reports.push(rep);
    }
    Ok((phi, reports))
}

/// `a (grad u + e_i)` cellwise.
pub(crate) fn flux(a: &CoefficientField, u: &ScalarField, i: usize) -> VectorField {
    let mut g = grad(u);
    g.component_mut(i).iter_mut().for_each(|v| *v += 1.0);
    a.apply(&g)
}

pub fn compute_flux_and_ahom(a: &CoefficientField, phi: &[ScalarField]) -> Result<(Vec<VectorField>, HomogenizedTensor)> {
    let d = a.dim();
    if phi.len() != d || phi.iter().any(|p| p.grid() != a.grid()) {
        return Err(Error::ShapeMismatch("corrector set does not match the coefficient field".into()));
    }
    let mut matrix = vec![0.0; d * d];
    let mut q = Vec::new();
    for (i, p) in phi.iter().enumerate() {
        let mut f = flux(a, p, i);
        let mean = f.mean();
        for (m, &mu) in mean.iter().enumerate() {
            matrix[m * d + i] = mu;
            f.component_mut(m).iter_mut().for_each(|v| *v -= mu);
        }
        q.push(f);
    }
    Ok((q, HomogenizedTensor::new(d, matrix)))
}

/// Right-hand sides `D_j^+ q_ik - D_k^+ q_ij` for all stored `(i, j < k)`.
pub(crate) fn curl_sources(q: &[VectorField]) -> Vec<(usize, usize, usize, Vec<f64>)> {
    let grid = q[0].grid();
    let d = grid.dim();
    let mut out = Vec::new();
    let mut t = vec![0.0; grid.len()];
    for (i, qi) in q.iter().enumerate() {
        for j in 0..d {
            for k in j + 1..d {
                let mut rhs = vec![0.0; grid.len()];
                forward_diff(&grid, qi.component(k), j, &mut rhs);
                forward_diff(&grid, qi.component(j), k, &mut t);
                par::axpy(-1.0, &t, &mut rhs);
                out.push((i, j, k, rhs));
            }
        }
    }
    out
}

/// Solves `shift sigma - Lap sigma = source` for every stored component, two at a time.
pub(crate) fn solve_sigma(q: &[VectorField], shift: f64) -> SkewTensorField {
    let grid = q[0].grid();
    let sp = Spectral::for_grid(grid);
    let symbol = sp.shifted_laplace(shift);
    let sources = curl_sources(q);
    let mut sigma = SkewTensorField::zeros(grid);
    for pair in sources.chunks(2) {
        if let [a, b] = pair {
            let (sa, sb) = sp.divide_pair(&a.3, &b.3, &symbol);
            *sigma.upper_mut(a.0, a.1, a.2) = sa;
            *sigma.upper_mut(b.0, b.1, b.2) = sb;
        } else {
            let a = &pair[0];
            let mut s = vec![0.0; grid.len()];
            sp.divide(&a.3, &symbol, &mut s);
            *sigma.upper_mut(a.0, a.1, a.2) = s;
        }
    }
    sigma
}

pub fn compute_sigma(q: &[VectorField]) -> Result<SkewTensorField> {
    if q.is_empty() || q.len() != q[0].grid().dim() {
        return Err(Error::ShapeMismatch("need one flux per direction".into()));
    }
    Ok(solve_sigma(q, 0.0))
}

/// `(div sigma_i)_j = sum_k D_k^- sigma_ijk`.
pub fn div_sigma(sigma: &SkewTensorField, i: usize) -> VectorField {
    let grid = sigma.grid();
    let d = grid.dim();
    let mut comps = vec![vec![0.0; grid.len()]; d];
    let mut t = vec![0.0; grid.len()];
    for (j, c) in comps.iter_mut().enumerate() {
        for k in 0..d {
            if k == j {
                continue;
            }
            let (lo, hi, sign) = if j < k { (j, k, 1.0) } else { (k, j, -1.0) };
            crate::lattice::backward_diff(&grid, sigma.upper(i, lo, hi), k, &mut t);
            par::axpy(sign, &t, c);
        }
    }
    VectorField::from_components(grid, comps).expect("div sigma shape")
}

fn div_sigma_residual(sigma: &SkewTensorField, qi: &VectorField, i: usize) -> f64 {
    let ds = div_sigma(sigma, i);
    let mut num = 0.0;
    for j in 0..qi.grid().dim() {
        num += ds.component(j).iter().zip(qi.component(j)).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    let den = qi.norm();
    if den == 0.0 {
        num.sqrt()
    } else {
        num.sqrt() / den
    }
}
