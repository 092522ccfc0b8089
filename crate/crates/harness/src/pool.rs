//! Scoped-thread executor.

use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use spde_weak::exec::Executor;

/// Splits `0..count` into fixed blocks handed out to `threads` workers.
/// Results are placed by index, so the output never depends on scheduling.
#[derive(Debug, Clone, Copy)]
pub struct ThreadExecutor {
    threads: usize,
}

const BLOCK: usize = 16;

impl ThreadExecutor {
    pub fn new(threads: usize) -> Self {
        Self { threads: threads.max(1) }
    }

    /// One worker per available core.
    pub fn available() -> Self {
        Self::new(std::thread::available_parallelism().map_or(1, NonZeroUsize::get))
    }

    pub fn threads(&self) -> usize {
        self.threads
    }
}

impl Executor for ThreadExecutor {
    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        if self.threads == 1 || count <= BLOCK {
            return (0..count).map(f).collect();
        }
        let next = AtomicUsize::new(0);
        let done: Mutex<Vec<(usize, Vec<T>)>> = Mutex::new(Vec::new());
        std::thread::scope(|scope| {
            for _ in 0..self.threads.min(count.div_ceil(BLOCK)) {
                scope.spawn(|| loop {
                    let start = next.fetch_add(BLOCK, Ordering::Relaxed);
                    if start >= count {
                        break;
                    }
                    let block: Vec<T> = (start..(start + BLOCK).min(count)).map(&f).collect();
                    done.lock().expect("worker panicked").push((start, block));
                });
            }
        });
        let mut blocks = done.into_inner().expect("worker panicked");
        blocks.sort_unstable_by_key(|(start, _)| *start);
        blocks.into_iter().flat_map(|(_, b)| b).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_index_order() {
        for threads in [1, 2, 3, 8] {
            let ex = ThreadExecutor::new(threads);
            for count in [0, 1, 15, 16, 17, 100, 1001] {
                let out = ex.map_indexed(count, |i| i * i);
                assert_eq!(out, (0..count).map(|i| i * i).collect::<Vec<_>>());
            }
        }
    }
}
