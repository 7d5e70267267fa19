//! Blocking factor sweep of one kernel, appended to a CSV file as the
//! bench command would.
//!
//! cargo run --release --example blocking_sweep -- [KERNEL] [NXxNYxNZ] [OUT.csv]

use lbmbench::cli::{append_csv, host_descriptor, RunRecord};
use lbmbench::geometry::{Dims, GeometrySpec};
use lbmbench::harness::{run_benchmark, BenchConfig};
use lbmbench::kernels::KernelDescriptor;

fn main() -> lbmbench::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kernel = KernelDescriptor::from_name(args.first().map_or("list-aa-pv-soa", String::as_str))?;
    let dims = args.get(1).map(|s| Dims::parse(s)).transpose()?.unwrap_or(Dims::new(100, 60, 60));
    let host = host_descriptor();
    let mut records = Vec::new();
    println!("{:>4} {:>10} {:>9} {:>7}", "blk", "MFLUP/s", "B_l", "v");
    for blk in [0, 2, 4, 8, 16, 32, 50] {
        let cfg = BenchConfig::new(kernel.clone().with_blk(blk), GeometrySpec::channel(dims.nx, dims.ny, dims.nz), 10, 1);
        let r = run_benchmark(&cfg, None)?;
        let v = r.v_fraction.map_or("-".into(), |v| format!("{v:.3}"));
        println!("{blk:>4} {:>10.2} {:>9} {v:>7}", r.mflups, r.loop_balance.to_string());
        records.push(RunRecord::from_result(&r, &host));
    }
    if let Some(p) = args.get(2) {
        append_csv(p.as_ref(), &records)?;
        println!("appended {} rows to {p}", records.len());
    }
    Ok(())
}
