//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the helpers dispatch to rayon; without
//! it, or with [`Exec::Sequential`], they run on the calling thread. Reductions
//! are performed over fixed-size chunks and merged in chunk order, so results do
//! not depend on the number of worker threads.

use num_complex::Complex64;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for reductions; fixed so that the summation order is
/// independent of the thread pool.
pub const REDUCE_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Evaluates `f(i)` for `i in 0..n`, returning results in index order.
pub fn map_indexed<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Applies `f(chunk_index, chunk)` to consecutive mutable chunks of `data`.
pub fn for_each_chunk_mut<T, F>(exec: Exec, data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = exec;
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Element-wise update `f(i, &mut a[i])`.
pub fn for_each_indexed_mut<T, F>(exec: Exec, data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    for_each_chunk_mut(exec, data, REDUCE_CHUNK, |ci, c| {
        let base = ci * REDUCE_CHUNK;
        for (j, v) in c.iter_mut().enumerate() {
            f(base + j, v);
        }
    });
}

/// Deterministic sum of `f(i)` over `0..n`.
pub fn sum_indexed<F>(exec: Exec, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(REDUCE_CHUNK);
    let partial = map_indexed(exec, chunks, |c| {
        let lo = c * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(n);
        (lo..hi).map(&f).sum::<f64>()
    });
    partial.into_iter().sum()
}

/// Deterministic complex inner product `Σ conj(a_i)·b_i`.
pub fn dot(exec: Exec, a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len().div_ceil(REDUCE_CHUNK);
    let partial = map_indexed(exec, chunks, |c| {
        let lo = c * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(a.len());
        a[lo..hi]
            .iter()
            .zip(&b[lo..hi])
            .fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
    });
    partial.into_iter().sum()
}

pub fn norm_sqr(exec: Exec, a: &[Complex64]) -> f64 {
    sum_indexed(exec, a.len(), |i| a[i].norm_sqr())
}

/// `y += alpha * x`
pub fn axpy(exec: Exec, alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for_each_indexed_mut(exec, y, |i, v| *v += alpha * x[i]);
}
