//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (the default), independent per-item work is
//! fanned out over rayon; without it the same closures run on one thread.
//! Output order always matches input order, so results are identical under
//! both modes and tie-breaking downstream never depends on scheduling.

/// Inputs smaller than this are not worth a rayon dispatch.
#[cfg(feature = "parallel")]
const PARALLEL_CUTOFF: usize = 32;

/// Which execution path this build uses.
pub fn execution_mode() -> &'static str {
    if cfg!(feature = "parallel") {
        "parallel"
    } else {
        "sequential"
    }
}

#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if items.len() < PARALLEL_CUTOFF {
        items.iter().map(f).collect()
    } else {
        items.par_iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_input_order() {
        let items: Vec<u64> = (0..1000).collect();
        let doubled = map_collect(&items, |&x| x * 2);
        assert_eq!(doubled, items.iter().map(|&x| x * 2).collect::<Vec<_>>());
    }
}
