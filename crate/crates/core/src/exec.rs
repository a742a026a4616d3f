//! Execution backends for data-parallel inner loops.
//!
//! Monte Carlo walks, k-means restarts, batch scoring, and per-agent
//! simulation work all reduce to "map a function over `0..n` and collect the
//! results in index order". [`map_indexed`] runs that pattern either
//! sequentially or on the rayon thread pool. Results are collected in index
//! order in both modes, so a computation produces bit-identical output on
//! either backend.
//!
//! The `parallel` cargo feature (on by default) enables the rayon backend and
//! makes it the default. Building with `--no-default-features` drops the
//! rayon dependency entirely and leaves only [`Backend::Sequential`].

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Which execution strategy to use for data-parallel loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[cfg_attr(feature = "parallel", default)]
    Rayon,
}

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_indexed<T, F>(backend: Backend, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match backend {
        Backend::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Backend::Rayon => (0..n).into_par_iter().map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_preserves_order() {
        let out = map_indexed(Backend::Sequential, 5, |i| i * i);
        assert_eq!(out, vec![0, 1, 4, 9, 16]);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn backends_agree() {
        let seq = map_indexed(Backend::Sequential, 1000, |i| i as u64 * 7 + 3);
        let par = map_indexed(Backend::Rayon, 1000, |i| i as u64 * 7 + 3);
        assert_eq!(seq, par);
    }
}
