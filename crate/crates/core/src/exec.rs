//! Ordered parallel execution of independent work units.

use rayon::prelude::*;

use crate::error::{invalid, Result};

/// Number of worker threads; `1` runs on the calling thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Parallelism(usize);

impl Parallelism {
    pub fn new(jobs: usize) -> Result<Self> {
        if jobs == 0 {
            return Err(invalid("parallelism degree must be at least 1"));
        }
        Ok(Self(jobs))
    }

    pub fn sequential() -> Self {
        Self(1)
    }

    pub fn jobs(&self) -> usize {
        self.0
    }

    /// Evaluate `f(0..count)` and return results in index order.
    ///
    /// Output is independent of the number of workers as long as `f` derives
    /// its randomness from the index alone.
    pub fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        if self.0 == 1 {
            return (0..count).map(f).collect();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(self.0).build() {
            Ok(pool) => pool.install(|| (0..count).into_par_iter().map(&f).collect()),
            Err(_) => (0..count).map(f).collect(),
        }
    }

    /// Like [`Parallelism::map`] for fallible work; the first error in index
    /// order wins.
    pub fn try_map<T, F>(&self, count: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        self.map(count, f).into_iter().collect()
    }
}

impl Default for Parallelism {
    fn default() -> Self {
        Self::sequential()
    }
}
