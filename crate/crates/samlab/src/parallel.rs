//! Data-parallel map helpers with a sequential fallback.
//!
//! Work items here are always independent (one optimizer run, one landscape
//! direction, one dataset sample), each internally deterministic, and results
//! are collected in index order — so the parallel and sequential paths
//! produce identical output. Build with `--no-default-features` to drop the
//! rayon dependency and force the sequential path everywhere.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_seq(n, f)
}

/// Always-sequential twin of [`map_indexed`]; kept public so benchmarks can
/// compare the two paths inside one compiled configuration.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let par = map_indexed(64, |i| i * i);
        let seq = map_indexed_seq(64, |i| i * i);
        assert_eq!(par, seq);
    }
}
