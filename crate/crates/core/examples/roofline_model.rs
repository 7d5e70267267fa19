//! Loop balance and Roofline ceiling of every kernel for a bandwidth file,
//! or for the reference bandwidths below when none is given.
//!
//! cargo run --release --example roofline_model -- [BANDWIDTHS.toml]

use lbmbench::cli::{run_stats, write_model_table};
use lbmbench::geometry::GeometrySpec;
use lbmbench::kernels::KernelDescriptor;
use lbmbench::perfmodel::{
    layer_condition_nodes, model_report, BandwidthSet, Microbench, AA_LIST_NODE_BYTES,
};

fn main() -> lbmbench::Result<()> {
    let bw = match std::env::args().nth(1) {
        Some(p) => BandwidthSet::load(p.as_ref())?,
        None => {
            let mut bw = BandwidthSet { host: Some("reference".into()), ..Default::default() };
            for (m, gbs) in [
                (Microbench::Copy, 53.9),
                (Microbench::Copy19, 48.0),
                (Microbench::Copy19NtSl, 48.2),
                (Microbench::Update19, 51.1),
            ] {
                bw.insert(m, gbs);
            }
            bw
        }
    };
    print!("{}", bw.to_toml());
    let stats = run_stats(&GeometrySpec::channel(500, 100, 100), 0)?;
    println!("\nchannel 500x100x100: {} runs over {} fluid nodes\n", stats.runs, stats.n_fluid);
    let rows = model_report(&bw, &KernelDescriptor::all(), Some(stats));
    write_model_table(&mut std::io::stdout(), &rows)?;

    let nodes = layer_condition_nodes(25.0 * 1024.0 * 1024.0, 10, 4, AA_LIST_NODE_BYTES);
    println!("\nlayer condition, 25 MiB, 10 workers, 4 layers: {nodes:.0} nodes per layer ({:.0}^2)", nodes.sqrt().floor());
    Ok(())
}
