//! Conditional data-parallelism helpers.
//!
//! Sampling and verification loops are embarrassingly parallel: every draw
//! owns an independent, seed-derived RNG, so results are identical whether the
//! loop runs sequentially or on a rayon pool. The `parallel` feature (default
//! on) enables the rayon path; without it everything falls back to sequential
//! iteration with the same API.

/// Execution strategy for a data-parallel loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    /// Parallel when the `parallel` feature is enabled, sequential otherwise.
    Auto,
    Sequential,
    /// Force the rayon path; falls back to sequential without the feature.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        Exec::Auto
    }
}

/// SplitMix64-style mix of a base seed and a draw index, so per-draw RNGs are
/// decorrelated and independent of iteration order.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Maps `f` over `0..count`, collecting results in index order.
pub fn map_indexed<T, F>(count: usize, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Exec::Sequential => (0..count).map(f).collect(),
        Exec::Auto | Exec::Parallel => map_indexed_par(count, f),
    }
}

#[cfg(feature = "parallel")]
fn map_indexed_par<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_indexed_par<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let a = map_indexed(100, Exec::Sequential, |i| mix_seed(42, i as u64));
        let b = map_indexed(100, Exec::Parallel, |i| mix_seed(42, i as u64));
        assert_eq!(a, b);
    }

    #[test]
    fn mix_seed_decorrelates_indices() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|i| mix_seed(7, i)).collect();
        assert_eq!(s.len(), 1000);
    }
}
