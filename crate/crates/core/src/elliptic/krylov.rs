use super::SolveReport;
use crate::par;

pub(crate) const RESTART: usize = 40;

fn norm(x: &[f64]) -> f64 {
    par::dot(x, x).sqrt()
}

/// Preconditioned conjugate gradients. The iteration restarts from the
/// recomputed residual whenever the recurrence claims convergence, so a
/// converged report always reflects `|b - A x| / |b|`.
pub(crate) fn pcg<A, M>(op: &mut A, pc: &M, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> SolveReport
where
    A: FnMut(&[f64], &mut [f64]),
    M: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return SolveReport { iterations: 0, residual: 0.0, converged: true };
    }
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut it = 0;
    loop {
        op(x, &mut q);
        par::zip_map(&mut r, |i| b[i] - q[i]);
        let rel = norm(&r) / bnorm;
        if rel <= tol {
            return SolveReport { iterations: it, residual: rel, converged: true };
        }
        if it >= max_iter {
            return SolveReport { iterations: it, residual: rel, converged: false };
        }
        pc(&r, &mut z);
        p.copy_from_slice(&z);
        let mut rz = par::dot(&r, &z);
        let start = it;
        while it < max_iter {
            op(&p, &mut q);
            let pq = par::dot(&p, &q);
            if !(pq > 0.0) || !(rz > 0.0) {
                break;
            }
            let alpha = rz / pq;
            par::axpy(alpha, &p, x);
            par::axpy(-alpha, &q, &mut r);
            it += 1;
            if norm(&r) / bnorm <= 0.5 * tol {
                break;
            }
            pc(&r, &mut z);
            let rz_new = par::dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            par::xpby(&z, beta, &mut p);
        }
        if it == start {
            op(x, &mut q);
            par::zip_map(&mut r, |i| b[i] - q[i]);
            return SolveReport { iterations: it, residual: norm(&r) / bnorm, converged: false };
        }
    }
}

/// Restarted GMRES with right preconditioning, for non-symmetric operators.
pub(crate) fn gmres<A, M>(
    op: &mut A,
    pc: &M,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    restart: usize,
) -> SolveReport
where
    A: FnMut(&[f64], &mut [f64]),
    M: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return SolveReport { iterations: 0, residual: 0.0, converged: true };
    }
    let m = restart.max(1);
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut it = 0;
    loop {
        op(x, &mut w);
        let mut r: Vec<f64> = b.iter().zip(&w).map(|(bi, wi)| bi - wi).collect();
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= tol {
            return SolveReport { iterations: it, residual: rel, converged: true };
        }
        if it >= max_iter {
            return SolveReport { iterations: it, residual: rel, converged: false };
        }
        r.iter_mut().for_each(|v| *v /= beta);
        basis.clear();
        basis.push(r);
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && it < max_iter {
            pc(&basis[k], &mut z);
            op(&z, &mut w);
            it += 1;
            for (i, v) in basis.iter().enumerate() {
                let hik = par::dot(&w, v);
                h[i][k] = hik;
                par::axpy(-hik, v, &mut w);
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let rho = h[k][k].hypot(h[k + 1][k]);
            if rho == 0.0 {
                break;
            }
            cs[k] = h[k][k] / rho;
            sn[k] = h[k + 1][k] / rho;
            h[k][k] = rho;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k += 1;
            if g[k].abs() / bnorm <= 0.5 * tol || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        if k == 0 {
            op(x, &mut w);
            let rel = b.iter().zip(&w).map(|(bi, wi)| (bi - wi).powi(2)).sum::<f64>().sqrt() / bnorm;
            return SolveReport { iterations: it, residual: rel, converged: rel <= tol };
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut t = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            par::axpy(*yi, v, &mut t);
        }
        pc(&t, &mut z);
        par::axpy(1.0, &z, x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(a: &[Vec<f64>]) -> impl FnMut(&[f64], &mut [f64]) + '_ {
        move |x: &[f64], y: &mut [f64]| {
            for (yi, row) in y.iter_mut().zip(a) {
                *yi = row.iter().zip(x).map(|(p, q)| p * q).sum();
            }
        }
    }

    #[test]
    fn small_dense_systems() {
        let spd = vec![vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]];
        let ns = vec![vec![4.0, 2.0, 0.0], vec![-1.0, 3.0, 1.0], vec![0.0, -1.0, 2.0]];
        let b = vec![1.0, 2.0, 3.0];
        let id = |r: &[f64], z: &mut [f64]| z.copy_from_slice(r);
        let mut x = vec![0.0; 3];
        let rep = pcg(&mut dense(&spd), &id, &b, &mut x, 1e-13, 50);
        assert!(rep.converged);
        let mut y = vec![0.0; 3];
        dense(&spd)(&x, &mut y);
        assert!(y.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-12));
        let mut x = vec![0.0; 3];
        let rep = gmres(&mut dense(&ns), &id, &b, &mut x, 1e-13, 50, 2);
        assert!(rep.converged, "{rep:?}");
        dense(&ns)(&x, &mut y);
        assert!(y.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-12));
    }
}
