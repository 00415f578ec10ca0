use super::{krylov, DivFormOperator, SolveOptions, SolveReport};
use crate::error::{Error, Result};
use crate::lattice::{Ball, CoefficientField, Grid, ScalarField};

/// `div(a grad u) = 0` on the ball cells, `u = boundary` elsewhere.
///
/// The problem is posed on a local patch torus of side `2 ceil(R) + 5` around
/// the center; every cell outside the ball is frozen, which includes the
/// one-cell collar reached by the stencil. Jacobi-preconditioned CG (GMRES
/// for non-symmetric `a`).
pub fn solve_dirichlet_ball(
    a: &CoefficientField,
    ball: &Ball,
    boundary: &ScalarField,
    opts: &SolveOptions,
) -> Result<(ScalarField, SolveReport)> {
    opts.validate()?;
    let grid = a.grid();
    if ball.grid() != grid || boundary.grid() != grid {
        return Err(Error::ShapeMismatch("ball, coefficient and boundary data on different grids".into()));
    }
    let d = grid.dim();
    let half = ball.radius().ceil() as usize + 2;
    let patch = Grid::patch(d, 2 * half + 1);
    let to_global: Vec<usize> = (0..patch.len())
        .map(|p| {
            let c = patch.coords(p);
            let mut off = [0i64; 3];
            for axis in 0..d {
                off[axis] = c[axis] as i64 - half as i64;
            }
            grid.offset(ball.center(), &off)
        })
        .collect();
    let entries = a.entries().iter().map(|e| to_global.iter().map(|&g| e[g]).collect()).collect();
    let local_a = CoefficientField::from_entries(patch, entries)?;
    let mut mask = vec![false; patch.len()];
    for o in ball.offsets() {
        let mut c = [0usize; 3];
        for axis in 0..d {
            c[axis] = (o[axis] + half as i64) as usize;
        }
        mask[patch.index(&c)] = true;
    }
    let v: Vec<f64> = to_global.iter().map(|&g| boundary.data()[g]).collect();

    let op = DivFormOperator::new(&local_a, 0.0);
    let mut ws = op.workspace();
    let mut lv = vec![0.0; patch.len()];
    op.apply(&v, &mut lv, &mut ws);
    let rhs: Vec<f64> = lv.iter().zip(&mask).map(|(l, &m)| if m { -l } else { 0.0 }).collect();
    let diag = op.diagonal();
    let mut masked_in = vec![0.0; patch.len()];
    let mut apply = |w: &[f64], out: &mut [f64]| {
        for ((t, wi), &m) in masked_in.iter_mut().zip(w).zip(&mask) {
            *t = if m { *wi } else { 0.0 };
        }
        op.apply(&masked_in, out, &mut ws);
        for (o, &m) in out.iter_mut().zip(&mask) {
            if !m {
                *o = 0.0;
            }
        }
    };
    let jacobi = |r: &[f64], z: &mut [f64]| {
        for i in 0..r.len() {
            z[i] = if mask[i] { r[i] / diag[i] } else { 0.0 };
        }
    };
    let mut x = vec![0.0; patch.len()];
    let report = if a.is_symmetric() {
        krylov::pcg(&mut apply, &jacobi, &rhs, &mut x, opts.tol, opts.max_iter)
    } else {
        krylov::gmres(&mut apply, &jacobi, &rhs, &mut x, opts.tol, opts.max_iter, krylov::RESTART)
    };
    let mut u = boundary.clone();
    for p in 0..patch.len() {
        if mask[p] {
            u.data_mut()[to_global[p]] = v[p] + x[p];
        }
    }
    Ok((u, report))
}

/// `R^2 sum_{B_{R/2}} |grad u|^2 / sum_{B_R} |u - avg_{B_R} u|^2`.
pub fn caccioppoli_ratio(u: &ScalarField, ball: &Ball) -> Result<f64> {
    let grid = u.grid();
    let r = ball.radius();
    let inner = Ball::new(grid, ball.center(), r / 2.0)?;
    let vals: Vec<f64> = ball.cells().iter().map(|&c| u.data()[c]).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let osc: f64 = vals.iter().map(|v| (v - mean).powi(2)).sum();
    let mut energy = 0.0;
    for c in inner.cells() {
        for axis in 0..grid.dim() {
            let mut off = [0i64; 3];
            off[axis] = 1;
            energy += (u.data()[grid.offset(c, &off)] - u.data()[c]).powi(2);
        }
    }
    if osc == 0.0 {
        return Ok(if energy == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(r * r * energy / osc)
}
