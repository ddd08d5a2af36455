//! Data-parallel sweeps. With the `parallel` feature the work is spread over
//! rayon's pool; without it (or under [`SequentialGuard`]) it runs in order.
//! Results always come back in input order.

use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Forces sequential sweeps while alive (used by benches and tests to compare modes).
pub struct SequentialGuard {
    previous: bool,
}

impl SequentialGuard {
    pub fn new() -> Self {
        SequentialGuard {
            previous: FORCE_SEQUENTIAL.swap(true, Ordering::SeqCst),
        }
    }
}

impl Default for SequentialGuard {
    fn default() -> Self {
        Self::new()
    }
}

impl Drop for SequentialGuard {
    fn drop(&mut self) {
        FORCE_SEQUENTIAL.store(self.previous, Ordering::SeqCst);
    }
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

/// Order-preserving map over a slice.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}
