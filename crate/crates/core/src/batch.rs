//! Evaluation of independent simulation cells.
//!
//! With the `parallel` feature the cells run on a rayon pool; without it
//! (or with `workers == 1`) they run in order on the calling thread. Output
//! order always matches input order, and cells share no mutable state, so
//! results are identical either way.

/// Applies `f` to every item, returning results in input order.
///
/// `workers == 0` means "use the default pool size".
pub fn map_cells<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if workers != 1 && items.len() > 1 {
            return parallel::map(items, workers, f);
        }
    }
    let _ = workers;
    items.iter().map(f).collect()
}

/// True when this build can run cells concurrently.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(feature = "parallel")]
mod parallel {
    use rayon::prelude::*;

    pub(super) fn map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build();
        match pool {
            Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
            // no threads available, fall back to the caller's thread
            Err(_) => items.iter().map(f).collect(),
        }
    }
}
