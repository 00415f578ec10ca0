use crate::lattice::{backward_diff, forward_diff, CoefficientField, Grid};
use crate::par;

/// `u -> inv_T u - div(a grad u)` with the cell coefficient acting on the
/// forward gradient at the same cell.
pub struct DivFormOperator<'a> {
    a: &'a CoefficientField,
    inv_t: f64,
    diagonal_only: bool,
}

pub struct Workspace {
    grads: Vec<Vec<f64>>,
    flux: Vec<f64>,
    tmp: Vec<f64>,
}

impl<'a> DivFormOperator<'a> {
    pub fn new(a: &'a CoefficientField, inv_t: f64) -> Self {
        let d = a.dim();
        let diagonal_only = (0..d).all(|m| (0..d).all(|n| m == n || a.entry(m, n).iter().all(|&v| v == 0.0)));
        Self { a, inv_t, diagonal_only }
    }

    pub fn grid(&self) -> Grid {
        self.a.grid()
    }

    pub fn workspace(&self) -> Workspace {
        let len = self.grid().len();
        Workspace { grads: vec![vec![0.0; len]; self.a.dim()], flux: vec![0.0; len], tmp: vec![0.0; len] }
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64], ws: &mut Workspace) {
        let grid = self.grid();
        let d = grid.dim();
        for (axis, g) in ws.grads.iter_mut().enumerate() {
            forward_diff(&grid, u, axis, g);
        }
        let inv_t = self.inv_t;
        par::zip_map(out, |i| inv_t * u[i]);
        for m in 0..d {
            let grads = &ws.grads;
            let a = self.a;
            if self.diagonal_only {
                let am = a.entry(m, m);
                let gm = &grads[m];
                par::zip_map(&mut ws.flux, |i| am[i] * gm[i]);
            } else {
                par::zip_map(&mut ws.flux, |i| (0..d).map(|n| a.entry(m, n)[i] * grads[n][i]).sum());
            }
            backward_diff(&grid, &ws.flux, m, &mut ws.tmp);
            par::axpy(-1.0, &ws.tmp, out);
        }
    }

    /// Diagonal of the stencil.
    pub fn diagonal(&self) -> Vec<f64> {
        let grid = self.grid();
        let d = grid.dim();
        let mut out = vec![0.0; grid.len()];
        par::zip_map(&mut out, |idx| {
            let mut s = self.inv_t;
            for m in 0..d {
                for n in 0..d {
                    s += self.a.entry(m, n)[idx];
                }
                let mut off = [0i64; 3];
                off[m] = -1;
                s += self.a.entry(m, m)[grid.offset(idx, &off)];
            }
            s
        });
        out
    }
}
