//! STREAM-like kernels bounding the memory traffic of the LBM kernels.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{streaming_stores_available, STRIP};
use crate::pool::{partition, WorkerPool};
use crate::storage::{PageBuf, SharedMut};

const STREAMS: usize = 19;
/// Start offset step between arrays, in elements: 17 cache lines.
const STAGGER: usize = 136;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Microbench {
    /// `b[i] = a[i]`.
    #[serde(rename = "copy")]
    Copy,
    /// Nineteen independent copies in one loop.
    #[serde(rename = "copy-19")]
    Copy19,
    /// `copy-19` with one cache-bypassing store stream.
    #[serde(rename = "copy-19-nt-sl")]
    Copy19NtSl,
    /// `a_k[i] = s * a_k[i]` for nineteen arrays.
    #[serde(rename = "update-19")]
    Update19,
}

impl Microbench {
    pub const ALL: [Microbench; 4] = [Microbench::Copy, Microbench::Copy19, Microbench::Copy19NtSl, Microbench::Update19];

    pub fn name(self) -> &'static str {
        match self {
            Microbench::Copy => "copy",
            Microbench::Copy19 => "copy-19",
            Microbench::Copy19NtSl => "copy-19-nt-sl",
            Microbench::Update19 => "update-19",
        }
    }

    /// Accounted memory traffic per element and stream: read, write and,
    /// for cached stores, the write-allocate.
    pub fn bytes_per_element(self) -> usize {
        match self {
            Microbench::Copy | Microbench::Copy19 => 24,
            Microbench::Copy19NtSl | Microbench::Update19 => 16,
        }
    }

    pub fn streams(self) -> usize {
        match self {
            Microbench::Copy => 1,
            _ => STREAMS,
        }
    }

    /// Arrays allocated per stream.
    fn arrays_per_stream(self) -> usize {
        match self {
            Microbench::Update19 => 1,
            _ => 2,
        }
    }

    /// Elements per array for a working set of `bytes`.
    pub fn elements_for(self, bytes: usize) -> usize {
        bytes / (8 * self.streams() * self.arrays_per_stream())
    }

    /// Bytes accounted for one pass over `elements` elements per array.
    pub fn accounted_bytes(self, elements: usize) -> u64 {
        (self.bytes_per_element() * self.streams() * elements) as u64
    }
}

impl fmt::Display for Microbench {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Microbench {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Microbench::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            Error::config(format!("unknown micro-benchmark '{s}'; valid: copy, copy-19, copy-19-nt-sl, update-19"))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthMeasurement {
    pub which: Microbench,
    pub working_set_bytes: usize,
    pub workers: usize,
    /// Bytes accounted for one repetition.
    pub bytes: u64,
    /// Median seconds of one repetition.
    pub seconds: f64,
    pub gbs: f64,
    pub repetitions: usize,
    /// False when `copy-19-nt-sl` ran with plain stores.
    pub streaming_stores: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicrobenchConfig {
    pub which: Microbench,
    pub working_set_bytes: usize,
    pub min_seconds: f64,
    pub min_repetitions: usize,
    /// Smallest accepted working set; four times the last-level cache by default.
    pub min_working_set: usize,
}

impl MicrobenchConfig {
    pub fn new(which: Microbench, working_set_bytes: usize) -> Self {
        MicrobenchConfig {
            which,
            working_set_bytes,
            min_seconds: 0.5,
            min_repetitions: 5,
            min_working_set: 4 * last_level_cache_bytes().unwrap_or(32 << 20),
        }
    }
}

/// Size of the largest cache of cpu0 as reported by sysfs.
pub fn last_level_cache_bytes() -> Option<usize> {
    let dir = std::fs::read_dir("/sys/devices/system/cpu/cpu0/cache").ok()?;
    dir.filter_map(|e| {
        let path = e.ok()?.path();
        let size = std::fs::read_to_string(path.join("size")).ok()?;
        parse_size(size.trim())
    })
    .max()
}

fn parse_size(s: &str) -> Option<usize> {
    let (num, mul) = match s.chars().last()? {
        'K' => (&s[..s.len() - 1], 1 << 10),
        'M' => (&s[..s.len() - 1], 1 << 20),
        'G' => (&s[..s.len() - 1], 1 << 30),
        _ => (s, 1),
    };
    num.parse::<usize>().ok().map(|n| n * mul)
}

/// Runs a micro-benchmark with the default protocol.
pub fn microbench(which: Microbench, working_set_bytes: usize, pool: &WorkerPool) -> Result<BandwidthMeasurement> {
    run_microbench(&MicrobenchConfig::new(which, working_set_bytes), pool)
}

/// Repeats the loop until both the time and repetition minimums are met
/// and reports the median repetition.
pub fn run_microbench(cfg: &MicrobenchConfig, pool: &WorkerPool) -> Result<BandwidthMeasurement> {
    let which = cfg.which;
    if cfg.working_set_bytes < cfg.min_working_set {
        return Err(Error::config(format!(
            "--size {} is below the minimum working set of {} bytes (4x last-level cache), e.g. --size {}",
            cfg.working_set_bytes,
            cfg.min_working_set,
            cfg.min_working_set.next_power_of_two()
        )));
    }
    let n = which.elements_for(cfg.working_set_bytes);
    if n == 0 {
        return Err(Error::config("--size too small for one element per array"));
    }
    let workers = pool.workers();
    let arrays = which.streams() * which.arrays_per_stream();
    let mut bufs: Vec<PageBuf<f64>> = (0..arrays).map(|k| PageBuf::zeroed(n + k * STAGGER)).collect::<Result<_>>()?;
    // distinct start offsets keep the streams out of one cache set
    let mut views: Vec<SharedMut<f64>> =
        bufs.iter_mut().enumerate().map(|(k, b)| SharedMut::from_slice(&mut b[k * STAGGER..])).collect();
    let dst = views.split_off(which.streams());
    let src = views;
    pool.run(|w| {
        for i in partition(n, workers, w) {
            for (k, a) in src.iter().enumerate() {
                // SAFETY: element range owned by worker w.
                unsafe { a.write(i, (k + i % 7) as f64) };
            }
            for b in &dst {
                unsafe { b.write(i, 0.0) };
            }
        }
    });
    let src_ptrs: Vec<Ptr> = src.iter().map(|a| Ptr(a.as_ptr())).collect();
    let dst_ptrs: Vec<Ptr> = dst.iter().map(|a| Ptr(a.as_ptr())).collect();
    let pass = || {
        pool.run(|w| {
            let r = partition(n, workers, w);
            // SAFETY: every array holds n elements; each worker touches only
            // its element range.
            unsafe {
                match which {
                    Microbench::Copy | Microbench::Copy19 => {
                        for i in r {
                            for (a, b) in src_ptrs.iter().zip(&dst_ptrs) {
                                *b.0.add(i) = *a.0.add(i);
                            }
                        }
                    }
                    Microbench::Update19 => {
                        for i in r {
                            for a in &src_ptrs {
                                *a.0.add(i) *= 0.999_999;
                            }
                        }
                    }
                    Microbench::Copy19NtSl => copy_nt_single(&src_ptrs, &dst_ptrs, r),
                }
            }
        });
    };
    let mut times = Vec::new();
    let mut total = 0.0;
    while times.len() < cfg.min_repetitions || total < cfg.min_seconds {
        let t0 = Instant::now();
        pass();
        let dt = t0.elapsed().as_secs_f64();
        total += dt;
        times.push(dt);
    }
    times.sort_by(f64::total_cmp);
    let seconds = times[times.len() / 2];
    let bytes = which.accounted_bytes(n);
    Ok(BandwidthMeasurement {
        which,
        working_set_bytes: cfg.working_set_bytes,
        workers,
        bytes,
        seconds,
        gbs: bytes as f64 / seconds / 1e9,
        repetitions: times.len(),
        streaming_stores: which != Microbench::Copy19NtSl || streaming_stores_available(),
    })
}

#[derive(Clone, Copy)]
struct Ptr(*mut f64);

unsafe impl Send for Ptr {}
unsafe impl Sync for Ptr {}

/// Strip-mined copy: all sources of a strip are staged, then written back
/// one destination at a time with streaming stores.
unsafe fn copy_nt_single(src: &[Ptr], dst: &[Ptr], r: std::ops::Range<usize>) {
    let mut stage = [[0.0f64; STRIP]; STREAMS];
    let mut i0 = r.start;
    while i0 < r.end {
        let len = STRIP.min(r.end - i0);
        for (k, a) in src.iter().enumerate() {
            for j in 0..len {
                stage[k][j] = *a.0.add(i0 + j);
            }
        }
        for (k, b) in dst.iter().enumerate() {
            let out = b.0.add(i0);
            for j in 0..len {
                crate::kernels::stream_f64(out.add(j), stage[k][j]);
            }
        }
        i0 += len;
    }
    crate::kernels::store_fence();
}
