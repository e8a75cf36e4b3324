//! Deterministic chunked parallelism.
//!
//! Work is split into fixed-size column chunks and partial results are
//! combined in chunk order, so floating-point reductions do not depend on the
//! number of worker threads.

use std::ops::Range;

/// Fixed chunk width; independent of thread count by design.
pub const CHUNK: usize = 16;

fn chunk_ranges(n: usize) -> Vec<Range<usize>> {
    (0..n)
        .step_by(CHUNK)
        .map(|s| s..(s + CHUNK).min(n))
        .collect()
}

/// Map fixed chunks of `0..n` to partial results, in chunk order.
#[cfg(feature = "parallel")]
pub fn map_chunks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    use rayon::prelude::*;
    chunk_ranges(n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_chunks<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(Range<usize>) -> T,
{
    chunk_ranges(n).into_iter().map(f).collect()
}

/// Map each index of `0..n` to a value, preserving order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
