use rayon::prelude::*;

use crate::error::{Error, Result};

/// `(0..count).map(f)` on up to `threads` workers. Results come back in index
/// order, so the output never depends on scheduling.
pub(crate) fn map_indexed<T, F>(threads: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if threads <= 1 || count <= 1 {
        return (0..count).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(&f).collect::<Vec<_>>())
        .into_iter()
        .collect()
}
