//! Execution strategy for data-parallel sweeps.
//!
//! With the default `parallel` feature the indexed maps run on rayon;
//! without it they degrade to plain sequential iteration. Callers that
//! combine per-index results in index order get bit-identical output from
//! both paths, which the Monte Carlo tests assert.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
/// Results are collected in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Send + Sync,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
/// Results are collected in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Send + Sync,
{
    (0..n).map(f).collect()
}

/// Always-sequential counterpart of [`map_indexed`]; the reference path for
/// benchmarks and determinism checks.
pub fn map_indexed_seq<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}

/// Sizes the global thread pool. Returns false when the crate was built
/// without the `parallel` feature or the pool was already initialized.
#[cfg(feature = "parallel")]
pub fn set_thread_count(n: usize) -> bool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .is_ok()
}

/// Sizes the global thread pool. Returns false when the crate was built
/// without the `parallel` feature or the pool was already initialized.
#[cfg(not(feature = "parallel"))]
pub fn set_thread_count(_n: usize) -> bool {
    false
}
