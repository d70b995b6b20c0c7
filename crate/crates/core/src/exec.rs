//! Execution mode for the data-parallel inner loops.
//!
//! Every parallel helper returns results in index order and reduces in a
//! fixed order, so `Sequential` and `Parallel` produce bit-identical output.
//! Without the `parallel` feature, `Parallel` silently runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sequential,
    Parallel,
}

impl Default for Mode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Mode::Parallel
        } else {
            Mode::Sequential
        }
    }
}

impl Mode {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Mode::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly spread over the rayon pool.
pub fn map_range<T, F>(mode: Mode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Fills `out` in row-major chunks of `width`, one closure call per row.
pub fn fill_rows<F>(mode: Mode, out: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        out.par_chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
        return;
    }
    let _ = mode;
    out.chunks_mut(width)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}

/// Sum of `f(i)` over `0..n`; per-index terms are summed sequentially in index order.
pub fn sum_range<F>(mode: Mode, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_range(mode, n, f).into_iter().sum()
}

/// Runs `job` inside a pool of `workers` threads (or directly when sequential).
pub fn with_workers<R: Send>(workers: usize, job: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if workers > 0 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            return pool.install(job);
        }
    }
    let _ = workers;
    job()
}
