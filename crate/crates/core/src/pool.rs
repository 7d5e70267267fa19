//! Fixed-size worker pool with optional core pinning and static partitions.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable capping the number of workers.
pub const MAX_WORKERS_ENV: &str = "LBMBENCH_MAX_WORKERS";

/// Binding outcome of one worker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub worker: usize,
    /// Requested core, `None` when the affinity list was too short.
    pub core: Option<usize>,
    pub applied: bool,
}

pub struct WorkerPool {
    pool: rayon::ThreadPool,
    workers: usize,
    bindings: Vec<Binding>,
}

impl std::fmt::Debug for WorkerPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WorkerPool").field("workers", &self.workers).field("bindings", &self.bindings).finish()
    }
}

/// Worker count after applying the environment cap.
pub fn capped_workers(requested: usize) -> usize {
    let cap = std::env::var(MAX_WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).filter(|&c| c > 0);
    match cap {
        Some(c) => requested.min(c),
        None => requested,
    }
}

impl WorkerPool {
    /// Creates `workers` threads. Worker `i` is pinned to `pin[i]` when the
    /// list provides an entry; failures are recorded, not fatal.
    pub fn new(workers: usize, pin: Option<&[usize]>) -> Result<Self> {
        if workers == 0 {
            return Err(Error::config("--threads: need at least one worker, e.g. --threads 4"));
        }
        let workers = capped_workers(workers);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("lbm-worker-{i}"))
            .build()
            .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
        let cores: Vec<Option<usize>> =
            (0..workers).map(|w| pin.and_then(|p| p.get(w).copied())).collect();
        let applied = pool.broadcast(|ctx| match cores[ctx.index()] {
            Some(core) => set_affinity(ctx.index(), core),
            None => false,
        });
        let bindings = (0..workers)
            .map(|w| Binding { worker: w, core: cores[w], applied: applied[w] })
            .collect();
        Ok(WorkerPool { pool, workers, bindings })
    }

    pub fn single() -> Self {
        Self::new(1, None).expect("single worker pool")
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn bindings(&self) -> &[Binding] {
        &self.bindings
    }

    /// True only if every worker was bound to its requested core.
    pub fn all_pinned(&self) -> bool {
        self.bindings.iter().all(|b| b.applied)
    }

    /// Runs `f(worker)` once on every worker and waits for all of them.
    /// The return acts as the barrier between sub-steps.
    pub fn run<F>(&self, f: F)
    where
        F: Fn(usize) + Sync,
    {
        if self.inline() {
            f(0);
        } else {
            self.pool.broadcast(|ctx| f(ctx.index()));
        }
    }

    /// Like [`run`](Self::run), collecting one value per worker in worker order.
    pub fn map<R, F>(&self, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync,
    {
        if self.inline() {
            vec![f(0)]
        } else {
            self.pool.broadcast(|ctx| f(ctx.index()))
        }
    }

    /// An unpinned single worker runs on the calling thread, which saves a
    /// wake-up per sweep on small lattices.
    fn inline(&self) -> bool {
        self.workers == 1 && self.bindings[0].core.is_none()
    }
}

/// Evenly splits `0..len` into `parts` contiguous ranges; range `k`.
pub fn partition(len: usize, parts: usize, k: usize) -> Range<usize> {
    let base = len / parts;
    let extra = len % parts;
    let start = k * base + k.min(extra);
    let size = base + usize::from(k < extra);
    start..start + size
}

/// Splits `0..len` into `parts` contiguous ranges whose interior boundaries
/// are multiples of `align` (the last range absorbs the remainder).
pub fn partition_aligned(len: usize, parts: usize, align: usize, k: usize) -> Range<usize> {
    let align = align.max(1);
    let chunks = len.div_ceil(align);
    let r = partition(chunks, parts, k);
    (r.start * align).min(len)..(r.end * align).min(len)
}

/// Binds the calling thread to `core`. Returns whether it succeeded.
#[cfg(target_os = "linux")]
pub fn set_affinity(_worker: usize, core: usize) -> bool {
    // SAFETY: cpu_set_t is plain data; CPU_SET is guarded by the size check.
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        if core >= 8 * std::mem::size_of::<libc::cpu_set_t>() {
            return false;
        }
        libc::CPU_SET(core, &mut set);
        libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set) == 0
    }
}

#[cfg(not(target_os = "linux"))]
pub fn set_affinity(_worker: usize, _core: usize) -> bool {
    false
}
