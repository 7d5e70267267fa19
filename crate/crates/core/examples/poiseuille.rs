//! Verifies every kernel against the analytical slit profile.
//!
//! cargo run --release --example poiseuille -- [NZ] [KERNEL...]

use std::sync::Arc;
use std::time::Instant;

use lbmbench::kernels::{KernelDescriptor, KERNEL_NAMES};
use lbmbench::pool::WorkerPool;
use lbmbench::verification::{verify_kernel, PoiseuilleCase};

fn main() -> lbmbench::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let nz = args.first().and_then(|a| a.parse().ok()).unwrap_or(34);
    let names: Vec<&str> = if args.len() > 1 { args[1..].iter().map(|s| s.as_str()).collect() } else { KERNEL_NAMES.to_vec() };
    let case = PoiseuilleCase::default().with_nz(nz);
    let pool = Arc::new(WorkerPool::new(1, None)?);
    println!("slit {}  g={:e}  nu={:.6}  peak={:.4e}", case.dims, case.g, case.params.nu, case.peak_velocity());
    println!("{:<28} {:>8} {:>12} {:>12} {:>12} {:>6} {:>7}", "kernel", "steps", "linf", "linf_raw", "l2", "pass", "secs");
    for name in names {
        let t0 = Instant::now();
        let r = verify_kernel(&KernelDescriptor::from_name(name)?, &case, pool.clone())?;
        println!(
            "{:<28} {:>8} {:>12.3e} {:>12.3e} {:>12.3e} {:>6} {:>7.1}",
            r.kernel,
            r.steps,
            r.linf,
            r.linf_raw,
            r.l2,
            r.passed,
            t0.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
