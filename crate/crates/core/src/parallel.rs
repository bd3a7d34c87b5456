//! Data-parallel map over independent tasks, with a sequential fallback.
//!
//! With the `parallel` feature the map runs on a rayon pool sized by the
//! `SEMIHEAT_WORKERS` environment variable (default: one per core). Results
//! always come back in input order.

use serde::Serialize;

pub const WORKERS_ENV: &str = "SEMIHEAT_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Worker count requested through the environment, if any.
pub fn requested_workers() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

pub fn map_ordered<T, R, F>(items: &[T], mode: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match mode {
        Execution::Serial => items.iter().map(f).collect(),
        Execution::Parallel => par_map(items, f),
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let work = || items.par_iter().map(&f).collect();
    match requested_workers().and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(work),
        None => work(),
    }
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..200).collect();
        let f = |x: &u64| (0..*x).map(|k| k * k).sum::<u64>();
        assert_eq!(map_ordered(&items, Execution::Serial, f), map_ordered(&items, Execution::Parallel, f));
    }
}
