//! Thread-pool runner.

use rayon::prelude::*;
use rydsim::exec::Runner;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "RYDSIM_WORKERS";

/// Runs work items on a dedicated rayon pool; results come back in index
/// order, so output is independent of the worker count.
pub struct PoolRunner {
    pool: rayon::ThreadPool,
}

impl PoolRunner {
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Runner for PoolRunner {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..n).into_par_iter().map(f).collect())
    }
}

/// Machine parallelism, or 1 if it cannot be determined.
pub fn available_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
