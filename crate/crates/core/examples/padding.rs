//! Direction start offsets of the list SoA lattice under each padding
//! policy, their cache and TLB sets, and the timing of one kernel.
//!
//! cargo run --release --example padding -- [NXxNYxNZ]

use std::collections::BTreeSet;

use lbmbench::geometry::{Dims, GeometrySpec};
use lbmbench::harness::{run_benchmark, BenchConfig};
use lbmbench::kernels::KernelDescriptor;
use lbmbench::lattice::{padding_offsets, CacheModel, PaddingPolicy};

fn main() -> lbmbench::Result<()> {
    let dims = std::env::args().nth(1).map(|s| Dims::parse(&s)).transpose()?.unwrap_or(Dims::new(200, 60, 60));
    let n_fluid = dims.nx * (dims.ny - 2) * (dims.nz - 2);
    let model = CacheModel::default();
    let kernel = KernelDescriptor::from_name("list-aa-soa")?;
    println!("{:<8} {:>11} {:>9} {:>10}", "padding", "cache sets", "TLB sets", "MFLUP/s");
    for policy in [PaddingPolicy::None, PaddingPolicy::Auto, PaddingPolicy::Thrash] {
        let offs = padding_offsets(n_fluid, &policy)?;
        let cache: BTreeSet<usize> = offs.iter().map(|&o| model.cache_set(o)).collect();
        let tlb: BTreeSet<usize> = offs.iter().map(|&o| model.tlb_set(o)).collect();
        let mut cfg = BenchConfig::new(kernel.clone(), GeometrySpec::channel(dims.nx, dims.ny, dims.nz), 10, 1);
        cfg.padding = policy.clone();
        let r = run_benchmark(&cfg, None)?;
        println!("{:<8} {:>11} {:>9} {:>10.2}", policy.to_string(), cache.len(), tlb.len(), r.mflups);
    }
    Ok(())
}
