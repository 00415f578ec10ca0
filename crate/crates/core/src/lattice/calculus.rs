//! Forward/backward difference calculus on the torus.
//!
//! `grad` uses forward differences and `div` backward differences, which makes
//! `div` the exact negative adjoint of `grad` under `<u, v> = sum_x u(x) v(x)`.

use crate::lattice::{Grid, ScalarField, VectorField};
use crate::par;

const ROW_BLOCK: usize = 64;

fn shifted_combine(grid: &Grid, u: &[f64], axis: usize, forward: bool, out: &mut [f64]) {
    let n = grid.n();
    let s = grid.stride(axis);
    if s == 1 {
        let rows = ROW_BLOCK.max(1);
        par::for_each_chunk_mut(out, n * rows, |c, chunk| {
            let base = c * n * rows;
            for (r, orow) in chunk.chunks_mut(n).enumerate() {
                let urow = &u[base + r * n..base + (r + 1) * n];
                if forward {
                    for i in 0..n - 1 {
                        orow[i] = urow[i + 1] - urow[i];
                    }
                    orow[n - 1] = urow[0] - urow[n - 1];
                } else {
                    orow[0] = urow[0] - urow[n - 1];
                    for i in 1..n {
                        orow[i] = urow[i] - urow[i - 1];
                    }
                }
            }
        });
    } else {
        par::for_each_chunk_mut(out, s, |p, oplane| {
            let outer = p / n;
            let i = p % n;
            let j = if forward { (i + 1) % n } else { (i + n - 1) % n };
            let here = &u[(outer * n + i) * s..(outer * n + i + 1) * s];
            let there = &u[(outer * n + j) * s..(outer * n + j + 1) * s];
            if forward {
                for ((o, a), b) in oplane.iter_mut().zip(there).zip(here) {
                    *o = a - b;
                }
            } else {
                for ((o, a), b) in oplane.iter_mut().zip(here).zip(there) {
                    *o = a - b;
                }
            }
        });
    }
}

/// `out(x) = u(x + e_axis) - u(x)`
pub fn forward_diff(grid: &Grid, u: &[f64], axis: usize, out: &mut [f64]) {
    shifted_combine(grid, u, axis, true, out);
}

/// `out(x) = u(x) - u(x - e_axis)`
pub fn backward_diff(grid: &Grid, u: &[f64], axis: usize, out: &mut [f64]) {
    shifted_combine(grid, u, axis, false, out);
}

/// Forward-difference gradient with periodic wrap.
pub fn grad(u: &ScalarField) -> VectorField {
    let grid = u.grid();
    let comps = (0..grid.dim())
        .map(|axis| {
            let mut c = vec![0.0; grid.len()];
            forward_diff(&grid, u.data(), axis, &mut c);
            c
        })
        .collect();
    VectorField::from_components(grid, comps).expect("grad shape")
}

/// Backward-difference divergence; `<grad u, F> = -<u, div F>` exactly.
pub fn div(f: &VectorField) -> ScalarField {
    let grid = f.grid();
    let mut out = vec![0.0; grid.len()];
    let mut tmp = vec![0.0; grid.len()];
    for axis in 0..grid.dim() {
        backward_diff(&grid, f.component(axis), axis, &mut tmp);
        par::axpy(1.0, &tmp, &mut out);
    }
    ScalarField::from_vec(grid, out).expect("div shape")
}

/// `div(grad u)`, the (2d+1)-point Laplacian.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    div(&grad(u))
}

/// `sum_x u(x) v(x)`
pub fn inner(u: &ScalarField, v: &ScalarField) -> f64 {
    par::dot(u.data(), v.data())
}

/// Order-independent sum: both `sum_x u(x + e)` and `sum_x u(x)` see the same
/// sorted multiset, so telescoping sums cancel bit-exactly.
pub(crate) fn sorted_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// Torus mean of `grad u`, computed so that periodicity makes it exactly zero.
pub fn torus_mean_of_grad(u: &ScalarField) -> Vec<f64> {
    let grid = u.grid();
    let len = grid.len() as f64;
    (0..grid.dim())
        .map(|axis| {
            let mut off = [0i64; 3];
            off[axis] = 1;
            let mut shifted: Vec<f64> = (0..grid.len()).map(|idx| u.data()[grid.offset(idx, &off)]).collect();
            let mut here = u.data().to_vec();
            (sorted_sum(&mut shifted) - sorted_sum(&mut here)) / len
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_scalar(grid: Grid, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ScalarField::from_vec(grid, (0..grid.len()).map(|_| rng.random::<f64>() - 0.5).collect()).unwrap()
    }

    fn random_vector(grid: Grid, seed: u64) -> VectorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps = (0..grid.dim()).map(|_| (0..grid.len()).map(|_| rng.random::<f64>() - 0.5).collect()).collect();
        VectorField::from_components(grid, comps).unwrap()
    }

    #[test]
    fn constant_has_zero_gradient() {
        let g = Grid::new(3, 8).unwrap();
        let du = grad(&ScalarField::constant(g, 3.5));
        assert!(du.components().iter().flatten().all(|&v| v == 0.0));
        let f = VectorField::constant(g, &[1.0, -2.0, 0.5]);
        assert!(div(&f).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sawtooth_gradient_at_seam() {
        let g = Grid::patch(2, 4);
        let u = ScalarField::from_vec(g, (0..g.len()).map(|idx| g.coords(idx)[0] as f64).collect()).unwrap();
        let du = grad(&u);
        for idx in 0..g.len() {
            let expect = if g.coords(idx)[0] == 3 { 1.0 - 4.0 } else { 1.0 };
            assert_eq!(du.component(0)[idx], expect);
            assert_eq!(du.component(1)[idx], 0.0);
        }
    }

    #[test]
    fn summation_by_parts() {
        for (dim, n) in [(2, 16), (3, 8)] {
            let g = Grid::new(dim, n).unwrap();
            let u = random_scalar(g, 1);
            let v = random_vector(g, 2);
            let lhs = grad(&u).inner(&v);
            let rhs = -inner(&u, &div(&v));
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn laplacian_matches_stencil() {
        let g = Grid::new(2, 8).unwrap();
        let u = random_scalar(g, 3);
        let lap = laplacian(&u);
        for idx in 0..g.len() {
            let mut expect = -4.0 * u.data()[idx];
            for off in [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]] {
                expect += u.data()[g.offset(idx, &off)];
            }
            assert!((lap.data()[idx] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn divergence_sums_to_zero() {
        let g = Grid::new(3, 8).unwrap();
        let f = random_vector(g, 4);
        assert!(div(&f).data().iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn torus_gradient_mean_is_exactly_zero() {
        let g = Grid::new(2, 16).unwrap();
        let u = random_scalar(g, 5);
        assert!(torus_mean_of_grad(&u).iter().all(|&m| m == 0.0));
    }
}
