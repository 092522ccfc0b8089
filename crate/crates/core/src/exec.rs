//! How Monte Carlo work is fanned out.
//!
//! Estimators in this crate describe the work per sample as a pure function
//! of the sample index; an [`Executor`] evaluates it for `0..count` and hands
//! back the results in index order. Reductions then run sequentially over
//! that vector, which makes every estimate independent of the worker count.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluates `f(i)` for `i in 0..count`; element `i` of the result is `f(i)`.
    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..count).map(f).collect()
    }
}
