//! Data-parallel helpers. With the `parallel` feature these dispatch to rayon,
//! otherwise they run the same closures sequentially.
//!
//! Floating-point reductions never go through rayon's adaptive `sum`: partial
//! sums are formed over fixed-size chunks and combined in index order, so the
//! result is bit-identical for any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

const SUM_CHUNK: usize = 4096;

pub(crate) fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Ordered map over `0..n`.
pub(crate) fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Elementwise map into `out`.
pub(crate) fn zip_map<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    for_each_chunk_mut(out, SUM_CHUNK, |c, chunk| {
        let base = c * SUM_CHUNK;
        for (k, o) in chunk.iter_mut().enumerate() {
            *o = f(base + k);
        }
    });
}

fn chunked_reduce<F>(len: usize, f: F) -> f64
where
    F: Fn(std::ops::Range<usize>) -> f64 + Sync + Send,
{
    let chunks = len.div_ceil(SUM_CHUNK);
    let partial = map_range(chunks, |c| f(c * SUM_CHUNK..((c + 1) * SUM_CHUNK).min(len)));
    partial.iter().sum()
}

/// Deterministic sum.
pub fn sum(x: &[f64]) -> f64 {
    chunked_reduce(x.len(), |r| x[r].iter().sum())
}

/// Deterministic dot product.
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    chunked_reduce(x.len(), |r| x[r.clone()].iter().zip(&y[r]).map(|(a, b)| a * b).sum())
}

/// `y += alpha * x`
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for_each_chunk_mut(y, SUM_CHUNK, |c, chunk| {
        let xs = &x[c * SUM_CHUNK..c * SUM_CHUNK + chunk.len()];
        for (yi, xi) in chunk.iter_mut().zip(xs) {
            *yi += alpha * xi;
        }
    });
}

/// `y = x + beta * y`
pub(crate) fn xpby(x: &[f64], beta: f64, y: &mut [f64]) {
    for_each_chunk_mut(y, SUM_CHUNK, |c, chunk| {
        let xs = &x[c * SUM_CHUNK..c * SUM_CHUNK + chunk.len()];
        for (yi, xi) in chunk.iter_mut().zip(xs) {
            *yi = xi + beta * *yi;
        }
    });
}
