//! Ordered map over independent jobs, sequential or rayon-backed.
//!
//! Drops, sitting trials, and batch objects are all independent; they are
//! mapped with [`map_ordered`] and then folded serially in job order, so a
//! parallel run produces output identical to a sequential one. The rayon
//! path is compiled behind the `parallel` feature; without it only
//! [`Execution::Sequential`] exists.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Rayon,
}

impl Execution {
    /// Picks the rayon path when compiled in and more than one worker was
    /// requested.
    pub fn for_workers(workers: usize) -> Execution {
        #[cfg(feature = "parallel")]
        {
            if workers != 1 {
                return Execution::Rayon;
            }
        }
        let _ = workers;
        Execution::Sequential
    }
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Rayon
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

/// Maps `f` over `items`, preserving input order in the output.
pub fn map_ordered<T, U, F>(exec: Execution, items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Send + Sync,
{
    match exec {
        Execution::Sequential => items.into_iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Rayon => items.into_par_iter().map(f).collect(),
    }
}

/// Runs `f` inside a rayon pool of the given size (parallel builds), or
/// directly (sequential builds or `workers <= 1`).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if workers > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("failed to build worker pool");
            return pool.install(f);
        }
    }
    let _ = workers;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_preserves_order() {
        let out = map_ordered(Execution::Sequential, (0..100).collect(), |x| x * 2);
        assert_eq!(out, (0..100).map(|x| x * 2).collect::<Vec<_>>());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn rayon_matches_sequential() {
        let seq = map_ordered(Execution::Sequential, (0..1000).collect(), |x: u64| x.wrapping_mul(2654435761));
        let par = map_ordered(Execution::Rayon, (0..1000).collect(), |x: u64| x.wrapping_mul(2654435761));
        assert_eq!(seq, par);
    }
}
