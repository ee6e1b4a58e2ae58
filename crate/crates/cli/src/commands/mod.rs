pub mod df;
pub mod harmonics;
pub mod simulate;
pub mod step;

use rayon::prelude::*;

/// Runs `f` over `items` on the current pool, keeping input order.
pub(crate) fn sweep<I, O, F>(items: &[I], f: F) -> anyhow::Result<Vec<O>>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> anyhow::Result<O> + Sync + Send,
{
    items.par_iter().map(f).collect()
}
