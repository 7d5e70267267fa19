//! Run-length coding of the channel adjacency: run count, loop balance of
//! the run-coded kernels and the share of nodes in full vector chunks.
//!
//! cargo run --release --example vectorizability -- [NXxNYxNZ]

use std::sync::Arc;

use lbmbench::geometry::{build_geometry, Dims, GeometrySpec};
use lbmbench::kernels::{KernelDescriptor, VECTOR_WIDTHS};
use lbmbench::lattice::{vectorizable_fraction, Layout, ListTopology, Orientation, PaddingPolicy, RiaCoding};
use lbmbench::perfmodel::{loop_balance, RunStats};
use lbmbench::pool::WorkerPool;

fn main() -> lbmbench::Result<()> {
    let dims = std::env::args().nth(1).map(|s| Dims::parse(&s)).transpose()?.unwrap_or(Dims::new(500, 100, 100));
    let ff = Arc::new(build_geometry(&GeometrySpec::channel(dims.nx, dims.ny, dims.nz))?);
    let ria_kernel = KernelDescriptor::from_name("list-aa-ria-soa")?;
    print!("{:>4} {:>9} {:>9} {:>8}", "blk", "runs", "R/n", "B_l");
    for w in VECTOR_WIDTHS {
        print!(" {:>7}", format!("v(W={w})"));
    }
    println!();
    for blk in [0, 2, 4, 8, 16, 50] {
        let topo = ListTopology::build(ff.clone(), Layout::SoA, blk, &PaddingPolicy::None, Orientation::Scatter, &WorkerPool::single())?;
        let ria = RiaCoding::build_ria(&topo);
        let stats = RunStats::of(&ria);
        let bl = loop_balance(&ria_kernel, Some(stats));
        print!("{blk:>4} {:>9} {:>9.5} {:>8}", stats.runs, stats.ratio(), bl.to_string());
        for w in VECTOR_WIDTHS {
            print!(" {:>7.4}", vectorizable_fraction(&ria, w));
        }
        println!();
    }
    Ok(())
}
