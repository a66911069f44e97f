//! Execution strategy for the data-parallel loops.
//!
//! Every parallel map in the crate goes through [`Parallelism::map`], which
//! collects results in index order so that outputs are identical whichever
//! strategy (and however many threads) is used.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    #[cfg(feature = "parallel")]
    Rayon,
}

impl Default for Parallelism {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Parallelism::Rayon
        }
        #[cfg(not(feature = "parallel"))]
        {
            Parallelism::Sequential
        }
    }
}

impl Parallelism {
    /// Applies `f` to `0..len` and returns the results in index order.
    pub fn map<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Parallelism::Sequential => (0..len).map(f).collect(),
            #[cfg(feature = "parallel")]
            Parallelism::Rayon => (0..len).into_par_iter().map(f).collect(),
        }
    }
}

/// Runs `f` inside a worker pool of `threads` threads (`None`: one per
/// logical core). Without the `parallel` feature `f` simply runs inline.
pub fn with_threads<T, F>(threads: Option<usize>, f: F) -> crate::Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    #[cfg(feature = "parallel")]
    {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            builder = builder.num_threads(t);
        }
        let pool = builder.build().map_err(|e| crate::Error::InvalidConfig(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(f())
    }
}
