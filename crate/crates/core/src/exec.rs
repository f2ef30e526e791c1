//! Parallel map abstraction.
//!
//! The core never spawns threads. Callers hand in an [`Executor`]; results
//! always come back in index order so reductions are independent of the
//! number of workers.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluates `f(0), …, f(n−1)` and returns the results in index order.
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
