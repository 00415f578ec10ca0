//! FFT machinery on the torus and exact solves for constant-coefficient operators.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::lattice::{Grid, ScalarField};
use crate::par;

const LINE_BATCH: usize = 16;

/// Cached FFT plans and symbols for one grid.
pub struct Spectral {
    grid: Grid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `4 sum_i sin^2(pi k_i / n)`, the symbol of `-div grad`, per mode.
    laplace: Vec<f64>,
    /// `exp(2 pi i k / n) - 1`, the symbol of the forward difference along one axis.
    phase: Vec<Complex64>,
}

fn cache() -> &'static Mutex<HashMap<Grid, Arc<Spectral>>> {
    static CACHE: OnceLock<Mutex<HashMap<Grid, Arc<Spectral>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl Spectral {
    pub fn for_grid(grid: Grid) -> Arc<Spectral> {
        let mut map = cache().lock().expect("spectral cache poisoned");
        map.entry(grid).or_insert_with(|| Arc::new(Spectral::build(grid))).clone()
    }

    fn build(grid: Grid) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let sin2: Vec<f64> = (0..n).map(|k| 4.0 * (PI * k as f64 / n as f64).sin().powi(2)).collect();
        let phase = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                Complex64::new(t.cos() - 1.0, t.sin())
            })
            .collect();
        let laplace = (0..grid.len())
            .map(|idx| {
                let c = grid.coords(idx);
                (0..grid.dim()).map(|a| sin2[c[a]]).sum()
            })
            .collect();
        Self { grid, fwd, inv, laplace, phase }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn laplace_symbol(&self) -> &[f64] {
        &self.laplace
    }

    fn transform_axis(&self, buf: &mut [Complex64], axis: usize, plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n();
        let s = self.grid.stride(axis);
        if s == 1 {
            par::for_each_chunk_mut(buf, n * LINE_BATCH * 4, |_, chunk| {
                let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
                plan.process_with_scratch(chunk, &mut scratch);
            });
            return;
        }
        par::for_each_chunk_mut(buf, n * s, |_, block| {
            let batch = LINE_BATCH.min(s);
            let mut lines = vec![Complex64::default(); n * batch];
            let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
            let mut j0 = 0;
            while j0 < s {
                let b = batch.min(s - j0);
                for i in 0..n {
                    let row = &block[i * s + j0..i * s + j0 + b];
                    for (t, v) in row.iter().enumerate() {
                        lines[t * n + i] = *v;
                    }
                }
                plan.process_with_scratch(&mut lines[..b * n], &mut scratch);
                for i in 0..n {
                    let row = &mut block[i * s + j0..i * s + j0 + b];
                    for (t, v) in row.iter_mut().enumerate() {
                        *v = lines[t * n + i];
                    }
                }
                j0 += b;
            }
        });
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, buf: &mut [Complex64]) {
        for axis in 0..self.grid.dim() {
            self.transform_axis(buf, axis, &self.fwd);
        }
    }

    /// Normalized inverse transform in place.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        for axis in 0..self.grid.dim() {
            self.transform_axis(buf, axis, &self.inv);
        }
        let s = 1.0 / self.grid.len() as f64;
        par::for_each_chunk_mut(buf, 4096, |_, c| c.iter_mut().for_each(|v| *v *= s));
    }

    /// Real symbol of `-div(A grad)` for a constant matrix `A` (its symmetric part), plus `shift`.
    pub fn operator_symbol(&self, a0: &[f64], shift: f64) -> Vec<f64> {
        let d = self.grid.dim();
        (0..self.grid.len())
            .map(|idx| {
                let c = self.grid.coords(idx);
                let mut s = shift;
                for i in 0..d {
                    for j in 0..d {
                        let gi = self.phase[c[i]];
                        let gj = self.phase[c[j]];
                        s += a0[i * d + j] * (gi.conj() * gj).re;
                    }
                }
                s
            })
            .collect()
    }

    /// `out = F^{-1}[ F[rhs] / denom ]`; modes with `denom == 0` are set to zero.
    pub fn divide(&self, rhs: &[f64], denom: &[f64], out: &mut [f64]) {
        let mut buf: Vec<Complex64> = rhs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        divide_modes(&mut buf, denom);
        self.inverse(&mut buf);
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = b.re;
        }
    }

    /// Two real solves with the same real, even symbol packed into one complex transform.
    pub fn divide_pair(&self, rhs_a: &[f64], rhs_b: &[f64], denom: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut buf: Vec<Complex64> = rhs_a.iter().zip(rhs_b).map(|(&a, &b)| Complex64::new(a, b)).collect();
        self.forward(&mut buf);
        divide_modes(&mut buf, denom);
        self.inverse(&mut buf);
        (buf.iter().map(|v| v.re).collect(), buf.iter().map(|v| v.im).collect())
    }

    /// Symbol of `shift - Laplacian`.
    pub fn shifted_laplace(&self, shift: f64) -> Vec<f64> {
        self.laplace.iter().map(|s| s + shift).collect()
    }

    /// Periodic convolution `(u * kernel)(x) = sum_y kernel(y) u(x - y)`.
    pub fn convolve(&self, u: &[f64], kernel: &[f64]) -> Vec<f64> {
        let mut ku: Vec<Complex64> = u.iter().zip(kernel).map(|(&a, &b)| Complex64::new(a, b)).collect();
        self.forward(&mut ku);
        // split the packed transform: U(k) = (Z(k) + conj Z(-k)) / 2, K(k) = (Z(k) - conj Z(-k)) / 2i
        let g = self.grid;
        let mut prod = vec![Complex64::default(); g.len()];
        let n = g.n();
        par::zip_map(&mut prod, |idx| {
            let c = g.coords(idx);
            let mut neg = [0usize; 3];
            for a in 0..g.dim() {
                neg[a] = (n - c[a]) % n;
            }
            let z = ku[idx];
            let zc = ku[g.index(&neg)].conj();
            let uh = (z + zc) * 0.5;
            let kh = (z - zc) * Complex64::new(0.0, -0.5);
            uh * kh
        });
        self.inverse(&mut prod);
        prod.iter().map(|v| v.re).collect()
    }
}

fn divide_modes(buf: &mut [Complex64], denom: &[f64]) {
    par::for_each_chunk_mut(buf, 4096, |c, chunk| {
        let d = &denom[c * 4096..c * 4096 + chunk.len()];
        for (v, &s) in chunk.iter_mut().zip(d) {
            if s == 0.0 {
                *v = Complex64::default();
            } else {
                *v /= s;
            }
        }
    });
}

/// Zero-mean `u` with `-div grad u = rhs - mean(rhs)`.
pub fn poisson_solve(rhs: &ScalarField) -> ScalarField {
    let sp = Spectral::for_grid(rhs.grid());
    let mut out = ScalarField::zeros(rhs.grid());
    sp.divide(rhs.data(), sp.laplace_symbol(), out.data_mut());
    out
}

/// `u` with `inv_t u - div grad u = rhs`, `inv_t > 0`.
pub fn massive_poisson_solve(rhs: &ScalarField, inv_t: f64) -> ScalarField {
    assert!(inv_t > 0.0, "massive solve needs a positive mass");
    let sp = Spectral::for_grid(rhs.grid());
    let mut out = ScalarField::zeros(rhs.grid());
    sp.divide(rhs.data(), &sp.shifted_laplace(inv_t), out.data_mut());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::calculus::laplacian;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_zero_mean(grid: Grid, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = ScalarField::from_vec(grid, (0..grid.len()).map(|_| rng.random::<f64>() - 0.5).collect()).unwrap();
        u.subtract_mean();
        u
    }

    #[test]
    fn fft_roundtrip() {
        for (dim, n) in [(2, 12), (3, 8), (2, 16)] {
            let g = Grid::patch(dim, n);
            let sp = Spectral::for_grid(g);
            let u = random_zero_mean(g, 9);
            let mut buf: Vec<Complex64> = u.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
            sp.forward(&mut buf);
            sp.inverse(&mut buf);
            for (a, b) in buf.iter().zip(u.data()) {
                assert!((a.re - b).abs() < 1e-14 && a.im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let g = Grid::new(2, 16).unwrap();
        let u = poisson_solve(&ScalarField::zeros(g));
        assert!(u.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn inverts_laplacian_of_zero_mean_field() {
        for (dim, n) in [(2, 32), (3, 16)] {
            let g = Grid::new(dim, n).unwrap();
            let w = random_zero_mean(g, 11);
            let mut rhs = laplacian(&w);
            rhs.scale(-1.0);
            let u = poisson_solve(&rhs);
            let err: f64 = u.data().iter().zip(w.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(err <= 1e-10 * w.norm(), "relative error {}", err / w.norm());
            // residual contract
            let mut res = laplacian(&u);
            res.data_mut().iter_mut().zip(rhs.data()).for_each(|(r, f)| *r += f);
            assert!(res.norm() <= 1e-12 * rhs.norm());
        }
    }

    #[test]
    fn single_mode_is_divided_by_symbol() {
        let g = Grid::new(2, 16).unwrap();
        let (k1, k2) = (3.0, 5.0);
        let n = g.n() as f64;
        let rhs = ScalarField::from_vec(
            g,
            (0..g.len())
                .map(|idx| {
                    let c = g.coords(idx);
                    (2.0 * PI * (k1 * c[0] as f64 + k2 * c[1] as f64) / n).cos()
                })
                .collect(),
        )
        .unwrap();
        let symbol = 4.0 * ((PI * k1 / n).sin().powi(2) + (PI * k2 / n).sin().powi(2));
        let u = poisson_solve(&rhs);
        for (a, b) in u.data().iter().zip(rhs.data()) {
            assert!((a - b / symbol).abs() < 1e-13);
        }
    }

    #[test]
    fn packed_pair_matches_two_solves() {
        let g = Grid::new(2, 16).unwrap();
        let sp = Spectral::for_grid(g);
        let a = random_zero_mean(g, 1);
        let b = random_zero_mean(g, 2);
        let sym = sp.shifted_laplace(0.25);
        let (ua, ub) = sp.divide_pair(a.data(), b.data(), &sym);
        let mut ua1 = vec![0.0; g.len()];
        let mut ub1 = vec![0.0; g.len()];
        sp.divide(a.data(), &sym, &mut ua1);
        sp.divide(b.data(), &sym, &mut ub1);
        for i in 0..g.len() {
            assert!((ua[i] - ua1[i]).abs() < 1e-13 && (ub[i] - ub1[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn convolution_with_delta_is_identity() {
        let g = Grid::new(2, 16).unwrap();
        let sp = Spectral::for_grid(g);
        let u = random_zero_mean(g, 4);
        let mut k = vec![0.0; g.len()];
        k[0] = 1.0;
        let c = sp.convolve(u.data(), &k);
        for (a, b) in c.iter().zip(u.data()) {
            assert!((a - b).abs() < 1e-14);
        }
        // shift kernel: (u * delta_e1)(x) = u(x - e1)
        let mut k = vec![0.0; g.len()];
        k[g.index(&[1, 0])] = 1.0;
        let c = sp.convolve(u.data(), &k);
        for idx in 0..g.len() {
            assert!((c[idx] - u.data()[g.offset(idx, &[-1, 0, 0])]).abs() < 1e-14);
        }
    }
}
