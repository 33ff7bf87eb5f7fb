use std::time::Instant;

use gdtune_core::tuner::Executor;
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Work-stealing executor on a private rayon pool. Results keep index
/// order, so output does not depend on the thread count.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
    clock: Option<Instant>,
}

impl RayonExecutor {
    /// `threads = None` uses rayon's default (one per core). Wall-clock
    /// timing is recorded only when `timing` is set.
    pub fn new(threads: Option<usize>, timing: bool) -> Result<Self> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            if n == 0 {
                return Err(CliError::Config("threads must be at least 1".into()));
            }
            b = b.num_threads(n);
        }
        let pool = b.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        Ok(RayonExecutor {
            pool,
            clock: timing.then(Instant::now),
        })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }

    fn now_ms(&self) -> Option<f64> {
        self.clock.map(|c| c.elapsed().as_secs_f64() * 1e3)
    }
}
