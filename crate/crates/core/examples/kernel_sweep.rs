//! Times every kernel on one geometry and prints MFLUP/s next to the
//! loop balance.
//!
//! cargo run --release --example kernel_sweep -- [NXxNYxNZ] [ITERATIONS] [THREADS]

use lbmbench::geometry::{Dims, GeometrySpec};
use lbmbench::harness::{run_benchmark, BenchConfig};
use lbmbench::kernels::KernelDescriptor;

fn main() -> lbmbench::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dims = args.first().map(|s| Dims::parse(s)).transpose()?.unwrap_or(Dims::new(100, 60, 60));
    let iterations = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let threads = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let geometry = GeometrySpec::channel(dims.nx, dims.ny, dims.nz);
    println!("channel {dims}, {iterations} iterations, {threads} threads");
    println!("{:<28} {:>10} {:>10} {:>8}", "kernel", "MFLUP/s", "B_l", "v");
    for k in KernelDescriptor::all() {
        let r = run_benchmark(&BenchConfig::new(k, geometry, iterations, threads), None)?;
        let v = r.v_fraction.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!("{:<28} {:>10.2} {:>10} {:>8}", r.config.kernel.name, r.mflups, r.loop_balance.to_string(), v);
    }
    Ok(())
}
