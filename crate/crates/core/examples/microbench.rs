//! Memory bandwidth of the four micro-benchmarks; optionally saved as a
//! bandwidth file for the model and bench commands.
//!
//! cargo run --release --example microbench -- [THREADS] [BYTES] [OUT.toml]

use lbmbench::cli::host_descriptor;
use lbmbench::perfmodel::{last_level_cache_bytes, microbench, BandwidthSet, Microbench};
use lbmbench::pool::WorkerPool;

fn main() -> lbmbench::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let threads = args.first().and_then(|s| s.parse().ok()).unwrap_or(1);
    let llc = last_level_cache_bytes().unwrap_or(32 << 20);
    let size = args.get(1).and_then(|s| s.parse().ok()).unwrap_or((4 * llc).max(1 << 30));
    let pool = WorkerPool::new(threads, None)?;
    println!("last-level cache {} KiB, working set {} MiB, {threads} threads", llc >> 10, size >> 20);
    let mut set = BandwidthSet { host: Some(host_descriptor()), ..Default::default() };
    for m in Microbench::ALL {
        let r = microbench(m, size, &pool)?;
        let note = if r.streaming_stores { "" } else { " (plain stores)" };
        println!("{:<14} {:>7.2} GB/s  {} reps, median {:.4} s{note}", m.name(), r.gbs, r.repetitions, r.seconds);
        set.insert(m, r.gbs);
    }
    if let Some(p) = args.get(2) {
        set.save(p.as_ref())?;
        println!("saved {p}");
    }
    Ok(())
}
