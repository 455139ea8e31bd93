//! Sequential or data-parallel execution of ensemble work.
//!
//! Every sampler in this crate is a pure function of a per-sample RNG
//! stream, so ensembles parallelize over the sample index with no ordering
//! requirements. Results are always collected in sample order, which keeps
//! downstream reductions independent of the thread schedule.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How to run an ensemble. `Parallel` falls back to sequential execution
/// when the crate is built without the `parallel` feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        ExecMode::Parallel
    }
}

/// Apply `f` to every sample index in `0..count`, returning results in
/// index order regardless of mode.
pub fn map_samples<T, F>(count: u64, mode: ExecMode, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match mode {
        ExecMode::Sequential => (0..count).map(f).collect(),
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                (0..count).into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..count).map(f).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let f = |i: u64| (i * i) as f64 + 0.25;
        let seq = map_samples(257, ExecMode::Sequential, f);
        let par = map_samples(257, ExecMode::Parallel, f);
        assert_eq!(seq, par);
    }
}
