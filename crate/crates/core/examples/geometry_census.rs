//! Fluid node counts and fractions of the synthetic geometries.
//!
//! cargo run --release --example geometry_census -- [NXxNYxNZ]

use lbmbench::geometry::{build_geometry, Dims, GeometryKind, GeometrySpec, GeometryStats};

fn main() -> lbmbench::Result<()> {
    let dims = std::env::args().nth(1).map(|s| Dims::parse(&s)).transpose()?.unwrap_or(Dims::new(500, 100, 100));
    println!("{:<8} {:>14} {:>12} {:>10}", "kind", "dims", "fluid", "fraction");
    for kind in GeometryKind::ALL {
        let spec = GeometrySpec::new(kind, dims);
        let s = GeometryStats::of(&spec, &build_geometry(&spec)?);
        println!("{:<8} {:>14} {:>12} {:>10.4}", kind.name(), dims.to_string(), s.fluid_count, s.fluid_fraction);
    }
    let pipe = GeometrySpec::pipe(20, 21, 21);
    let ff = build_geometry(&pipe)?;
    let r = pipe.pipe_radius();
    let circle = std::f64::consts::PI * r * r / (21.0 * 21.0);
    println!("\npipe 20x21x21: fluid fraction {:.4}, circle area fraction {circle:.4}", ff.fluid_fraction());
    Ok(())
}
