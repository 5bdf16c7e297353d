//! Single-loop fork-join partitioning.

use std::ops::Range;

use crate::types::{ParallelLoop, ParallelSpec};

/// Raw pointer that may cross thread boundaries. Users guarantee that
/// concurrent accesses through it touch disjoint elements.
#[derive(Debug)]
pub(crate) struct SyncPtr<T>(pub *mut T);

impl<T> Clone for SyncPtr<T> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<T> Copy for SyncPtr<T> {}

// SAFETY: see the type-level contract.
unsafe impl<T: Send> Send for SyncPtr<T> {}
unsafe impl<T: Send> Sync for SyncPtr<T> {}

/// `t`-th of `threads` contiguous chunks of `0..blocks`; sizes differ by at most one.
pub(crate) fn chunk(blocks: usize, threads: usize, t: usize) -> Range<usize> {
    let base = blocks / threads;
    let rem = blocks % threads;
    let start = t * base + t.min(rem);
    let len = base + usize::from(t < rem);
    start..start + len
}

/// Runs `body` over the block indices `0..blocks`. When `which` is the
/// plan's parallel loop the range is split statically across a scoped
/// thread team; the join is the barrier that publishes everything the
/// team wrote.
pub(crate) fn run_loop<F>(par: &ParallelSpec, which: ParallelLoop, blocks: usize, body: F)
where
    F: Fn(Range<usize>) + Sync,
{
    let threads = par.threads().min(blocks);
    if par.parallel_loop() != which || threads <= 1 {
        body(0..blocks);
        return;
    }
    std::thread::scope(|s| {
        let body = &body;
        for t in 1..threads {
            s.spawn(move || body(chunk(blocks, threads, t)));
        }
        body(chunk(blocks, threads, 0));
    });
}

/// Start and length of block `i` of `step` over `extent`.
#[inline]
pub(crate) fn block(i: usize, step: usize, extent: usize) -> (usize, usize) {
    let start = i * step;
    (start, step.min(extent - start))
}
