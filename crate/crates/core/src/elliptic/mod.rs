//! Krylov solvers for `inv_T u - div(a grad u) = f` on the torus and for
//! Dirichlet problems on discrete balls.

mod dirichlet;
mod krylov;
mod operator;

pub use dirichlet::{caccioppoli_ratio, solve_dirichlet_ball};
pub use operator::DivFormOperator;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{div, CoefficientField, ScalarField, Spectral, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    None,
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub preconditioner: Preconditioner,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 2000, preconditioner: Preconditioner::Spectral }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    /// Tolerances below the range `(0, 1e-3]` are accepted down to `1e-14`
    /// for oracle checks; above `1e-3` is rejected.
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-3) {
            return Err(Error::InvalidParameter(format!("solver tol {} outside (0, 1e-3]", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

impl SolveReport {
    /// `Err(NotConverged)` unless converged.
    pub fn check(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged { iterations: self.iterations, residual: self.residual })
        }
    }

    /// Worst of two reports.
    pub fn merge(self, other: SolveReport) -> SolveReport {
        SolveReport {
            iterations: self.iterations.max(other.iterations),
            residual: self.residual.max(other.residual),
            converged: self.converged && other.converged,
        }
    }
}

/// `inv_T u - div(a grad u) = div g`; zero-mean `u` when `inv_T = 0`.
pub fn solve_divform(
    a: &CoefficientField,
    g: &VectorField,
    inv_t: f64,
    opts: &SolveOptions,
) -> Result<(ScalarField, SolveReport)> {
    if g.grid() != a.grid() {
        return Err(Error::ShapeMismatch("coefficient and right-hand side on different grids".into()));
    }
    solve_scalar(a, &div(g), inv_t, opts, None)
}

/// `inv_T u - div(a grad u) = f`. For `inv_T = 0` the mean of `f` is projected
/// out and the zero-mean solution returned. `guess` seeds the iteration.
pub fn solve_scalar(
    a: &CoefficientField,
    f: &ScalarField,
    inv_t: f64,
    opts: &SolveOptions,
    guess: Option<&ScalarField>,
) -> Result<(ScalarField, SolveReport)> {
    opts.validate()?;
    let grid = a.grid();
    if f.grid() != grid || guess.is_some_and(|g| g.grid() != grid) {
        return Err(Error::ShapeMismatch("coefficient and right-hand side on different grids".into()));
    }
    if !(inv_t >= 0.0 && inv_t.is_finite()) {
        return Err(Error::InvalidParameter(format!("inv_T = {inv_t} must be finite and >= 0")));
    }
    let mut rhs = f.clone();
    if inv_t == 0.0 {
        rhs.subtract_mean();
    }
    let op = DivFormOperator::new(a, inv_t);
    let sp = Spectral::for_grid(grid);
    let symbol = match opts.preconditioner {
        Preconditioner::Spectral => Some(sp.operator_symbol(&a.mean_symmetric(), inv_t)),
        Preconditioner::None => None,
    };
    let precond = |r: &[f64], z: &mut [f64]| match &symbol {
        Some(s) => sp.divide(r, s, z),
        None => {
            z.copy_from_slice(r);
            if inv_t == 0.0 {
                let m = crate::par::sum(z) / z.len() as f64;
                z.iter_mut().for_each(|v| *v -= m);
            }
        }
    };
    let mut x = guess.map(|g| g.data().to_vec()).unwrap_or_else(|| vec![0.0; grid.len()]);
    let mut ws = op.workspace();
    let mut apply = |u: &[f64], out: &mut [f64]| op.apply(u, out, &mut ws);
    let report = if a.is_symmetric() {
        krylov::pcg(&mut apply, &precond, rhs.data(), &mut x, opts.tol, opts.max_iter)
    } else {
        krylov::gmres(&mut apply, &precond, rhs.data(), &mut x, opts.tol, opts.max_iter, krylov::RESTART)
    };
    let mut u = ScalarField::from_vec(grid, x)?;
    if inv_t == 0.0 {
        u.subtract_mean();
    }
    Ok((u, report))
}
