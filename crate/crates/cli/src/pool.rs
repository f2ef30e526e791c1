use pruefer_core::exec::Executor;
use rayon::prelude::*;

/// Executor backed by a dedicated rayon pool.
pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    /// `workers = 0` lets rayon pick the number of threads.
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Pool {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        // Indexed collect keeps index order whatever the scheduling.
        self.pool
            .install(|| (0..n).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_come_back_in_index_order() {
        let pool = Pool::new(3).unwrap();
        assert_eq!(pool.workers(), 3);
        let out = pool.map(1000, |i| i * i);
        assert!(out.iter().enumerate().all(|(i, &v)| v == i * i));
    }
}
