//! Replication-level parallelism.
//!
//! Work items are indexed; results come back in index order whatever the
//! schedule, so output never depends on the thread count. Without the
//! `parallel` feature everything runs on the calling thread.

use std::sync::atomic::{AtomicUsize, Ordering};

/// Environment variable overriding the default worker count.
pub const THREADS_ENV: &str = "LOCALEST_THREADS";

/// Worker count: an explicit cap wins, then `LOCALEST_THREADS`, then the
/// number of logical cores.
pub fn thread_count(cap: Option<usize>) -> usize {
    if let Some(c) = cap {
        return c.max(1);
    }
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        return n.max(1);
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Counts finished items; shared read-only with the caller.
#[derive(Debug, Default)]
pub struct Progress {
    done: AtomicUsize,
}

impl Progress {
    pub fn done(&self) -> usize {
        self.done.load(Ordering::Relaxed)
    }

    fn tick(&self) {
        self.done.fetch_add(1, Ordering::Relaxed);
    }
}

/// f(0), …, f(n − 1) on one thread.
pub fn map_sequential<T, F>(n: usize, progress: &Progress, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n)
        .map(|i| {
            let out = f(i);
            progress.tick();
            out
        })
        .collect()
}

/// f(0), …, f(n − 1) on a work-stealing pool of `threads` workers.
#[cfg(feature = "parallel")]
pub fn map_parallel<T, F>(n: usize, threads: usize, progress: &Progress, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    use rayon::prelude::*;
    if threads <= 1 {
        return map_sequential(n, progress, f);
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(_) => return map_sequential(n, progress, f),
    };
    pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let out = f(i);
                progress.tick();
                out
            })
            .collect()
    })
}

/// Dispatches to the pool when the `parallel` feature is on.
pub fn map_indexed<T, F>(n: usize, threads: usize, progress: &Progress, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        map_parallel(n, threads, progress, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        map_sequential(n, progress, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_threads() {
        let f = |i: usize| (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 7;
        let p = Progress::default();
        let one = map_indexed(1000, 1, &p, f);
        let four = map_indexed(1000, 4, &p, f);
        assert_eq!(one, four);
        assert_eq!(p.done(), 2000);
        assert!(map_indexed(0, 3, &p, f).is_empty());
    }

    #[test]
    fn explicit_cap_wins() {
        assert_eq!(thread_count(Some(3)), 3);
        assert_eq!(thread_count(Some(0)), 1);
        assert!(thread_count(None) >= 1);
    }
}
