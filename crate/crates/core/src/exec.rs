//! Data-parallel execution with a sequential fallback.
//!
//! Every parallel code path in the crate goes through [`Execution`]. Work is
//! split into index ranges whose boundaries never depend on the number of
//! worker threads, and partial results are always combined in index order, so
//! `Sequential` and `Parallel` produce bit-identical output.
//!
//! Without the `parallel` feature, `Execution::Parallel` silently runs
//! sequentially.

/// Fixed block size used when reductions are split into chunks.
pub const REDUCTION_BLOCK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// True when work will actually be distributed over a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Applies `f(chunk_index, chunk)` to consecutive `chunk`-sized pieces of `data`.
    pub fn for_each_chunk_mut<T, F>(self, data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        let chunk = chunk.max(1);
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
        for (i, c) in data.chunks_mut(chunk).enumerate() {
            f(i, c);
        }
    }
}
