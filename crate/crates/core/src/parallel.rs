//! Data-parallel map helpers with a sequential fallback.
//!
//! Results are collected in index order, so the parallel and sequential
//! paths produce identical outputs bit for bit. Training stays sequential;
//! these helpers back evaluation, pseudo-label generation, decision-grid
//! export, and experiment repeats.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sequential reference implementation, always available.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Parallel map over `0..n`, output in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed_par<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Map over `0..n` using rayon when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_par(n, f)
}

/// Map over `0..n`; sequential build.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_seq(n, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_output() {
        let out = map_indexed(100, |i| i * i);
        assert_eq!(out, map_indexed_seq(100, |i| i * i));
    }
}
