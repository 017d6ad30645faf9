//! Data-parallel map over an index range.
//!
//! With the default `parallel` feature the map runs on rayon; without it
//! the same code degrades to a sequential loop. Results are collected in
//! index order either way, so callers observe identical output from both
//! builds and from any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to every index in `0..count`, collecting results in order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

/// Applies `f` to every index in `0..count`, collecting results in order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}
