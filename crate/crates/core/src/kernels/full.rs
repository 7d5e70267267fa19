//! Sweeps over dense full-array lattices.
//!
//! Solid nodes are propagated but never collided; the correction step
//! turns what they received into the bounced populations of the next step.

use crate::d3q19::{collide_lanes, BodyForce, TrtParams, C, OPP, Q};
use crate::geometry::{Dims, NodeType};
use crate::lattice::{FullLattice, Layout};
use crate::pool::WorkerPool;
use crate::storage::SharedMut;

use super::SweepStats;

trait Index: Sync {
    fn idx(cell: usize, d: usize, stride: usize) -> usize;
}

struct Aos;
struct Soa;

impl Index for Aos {
    #[inline(always)]
    fn idx(cell: usize, d: usize, _stride: usize) -> usize {
        cell * Q + d
    }
}

impl Index for Soa {
    #[inline(always)]
    fn idx(cell: usize, d: usize, stride: usize) -> usize {
        d * stride + cell
    }
}

/// Base cell of the z line `(x + cx, y + cy)` for every direction, wrapped.
#[inline(always)]
fn line_bases(dims: Dims, x: usize, y: usize) -> [usize; Q] {
    std::array::from_fn(|d| {
        let xn = wrap_z(x, C[d][0], dims.nx);
        let yn = wrap_z(y, C[d][1], dims.ny);
        (xn * dims.ny + yn) * dims.nz
    })
}

/// `z + dz` wrapped into `0..nz` for `dz` in `-1..=1`.
#[inline(always)]
fn wrap_z(z: usize, dz: i32, nz: usize) -> usize {
    match dz {
        0 => z,
        1 => {
            if z + 1 == nz {
                0
            } else {
                z + 1
            }
        }
        _ => {
            if z == 0 {
                nz - 1
            } else {
                z - 1
            }
        }
    }
}

/// One-step sweep: reads the current buffer, writes the other one, swaps
/// and runs the correction step.
pub(crate) fn os_step(lat: &mut FullLattice, pull: bool, p: &TrtParams, g: &BodyForce, pool: &WorkerPool) {
    let cur = lat.current();
    let src = lat.shared(cur);
    let dst = lat.shared(cur ^ 1);
    match (lat.layout(), pull) {
        (Layout::AoS, false) => os_sweep::<Aos, false>(lat, src, dst, p, g, pool),
        (Layout::AoS, true) => os_sweep::<Aos, true>(lat, src, dst, p, g, pool),
        (Layout::SoA, false) => os_sweep::<Soa, false>(lat, src, dst, p, g, pool),
        (Layout::SoA, true) => os_sweep::<Soa, true>(lat, src, dst, p, g, pool),
    }
    lat.swap_buffers();
    lat.correction_step(pool);
}

fn os_sweep<I: Index, const PULL: bool>(
    lat: &FullLattice,
    src: SharedMut<f64>,
    dst: SharedMut<f64>,
    p: &TrtParams,
    g: &BodyForce,
    pool: &WorkerPool,
) {
    let dims = lat.dims();
    let nz = dims.nz;
    let stride = lat.stride();
    let flags = lat.flags().flags();
    pool.run(|w| {
        lat.for_each_segment(w, |x, y, z0, z1| {
            let nb = line_bases(dims, x, y);
            for z in z0..z1 {
                let cell = nb[0] + z;
                let mut q = [[0.0f64; 1]; Q];
                // SAFETY (whole block): push writes slot d of x + c_d, which
                // only node x targets; pull writes the own slots. Reads hit
                // the source buffer, which nobody writes in this sweep.
                unsafe {
                    if PULL {
                        for d in 0..Q {
                            let from = nb[OPP[d]] + wrap_z(z, -C[d][2], nz);
                            q[d][0] = src.read(I::idx(from, d, stride));
                        }
                    } else {
                        for d in 0..Q {
                            q[d][0] = src.read(I::idx(cell, d, stride));
                        }
                    }
                    if flags[cell] == NodeType::Fluid {
                        collide_lanes::<1>(&mut q, p, g);
                    }
                    if PULL {
                        for d in 0..Q {
                            dst.write(I::idx(cell, d, stride), q[d][0]);
                        }
                    } else {
                        for d in 0..Q {
                            let to = nb[d] + wrap_z(z, C[d][2], nz);
                            dst.write(I::idx(to, d, stride), q[d][0]);
                        }
                    }
                }
            }
        });
    });
}

/// AA even sub-step: node-local. Solid nodes are not collided, so their
/// populations end up swapped.
pub(crate) fn aa_even(
    lat: &mut FullLattice,
    width: usize,
    p: &TrtParams,
    g: &BodyForce,
    pool: &WorkerPool,
) -> SweepStats {
    let a = lat.shared(lat.current());
    match (lat.layout(), width) {
        (Layout::AoS, _) => aa_even_sweep::<Aos, 1>(lat, a, p, g, pool),
        (Layout::SoA, 1) => aa_even_sweep::<Soa, 1>(lat, a, p, g, pool),
        (Layout::SoA, 2) => aa_even_sweep::<Soa, 2>(lat, a, p, g, pool),
        (Layout::SoA, 4) => aa_even_sweep::<Soa, 4>(lat, a, p, g, pool),
        (Layout::SoA, 8) => aa_even_sweep::<Soa, 8>(lat, a, p, g, pool),
        (Layout::SoA, _) => aa_even_sweep::<Soa, 16>(lat, a, p, g, pool),
    }
}

fn aa_even_sweep<I: Index, const L: usize>(
    lat: &FullLattice,
    a: SharedMut<f64>,
    p: &TrtParams,
    g: &BodyForce,
    pool: &WorkerPool,
) -> SweepStats {
    let dims = lat.dims();
    let stride = lat.stride();
    let flags = lat.flags().flags();
    let stats = pool.map(|w| {
        let mut st = SweepStats::default();
        lat.for_each_segment(w, |x, y, z0, z1| {
            let line = dims.cell(x, y, 0);
            let mut z = z0;
            // SAFETY (whole block): every access stays within the node's own slots.
            unsafe {
                while L > 1 && z + L <= z1 {
                    let cell = line + z;
                    if (0..L).all(|l| flags[cell + l] == NodeType::Fluid) {
                        let mut q = [[0.0f64; L]; Q];
                        for d in 0..Q {
                            for l in 0..L {
                                q[d][l] = a.read(I::idx(cell + l, d, stride));
                            }
                        }
                        collide_lanes::<L>(&mut q, p, g);
                        for d in 0..Q {
                            for l in 0..L {
                                a.write(I::idx(cell + l, OPP[d], stride), q[d][l]);
                            }
                        }
                        st.vector_nodes += L as u64;
                    } else {
                        for l in 0..L {
                            even_node::<I>(a, cell + l, stride, flags[cell + l] == NodeType::Fluid, p, g);
                        }
                        st.scalar_nodes += L as u64;
                    }
                    z += L;
                }
                while z < z1 {
                    let cell = line + z;
                    even_node::<I>(a, cell, stride, flags[cell] == NodeType::Fluid, p, g);
                    st.scalar_nodes += 1;
                    z += 1;
                }
            }
        });
        st
    });
    stats.into_iter().sum()
}

#[inline(always)]
unsafe fn even_node<I: Index>(
    a: SharedMut<f64>,
    cell: usize,
    stride: usize,
    fluid: bool,
    p: &TrtParams,
    g: &BodyForce,
) {
    let mut q = [[0.0f64; 1]; Q];
    for d in 0..Q {
        q[d][0] = a.read(I::idx(cell, d, stride));
    }
    if fluid {
        collide_lanes::<1>(&mut q, p, g);
    }
    for d in 0..Q {
        a.write(I::idx(cell, OPP[d], stride), q[d][0]);
    }
}

/// AA odd sub-step over fluid nodes followed by the correction step.
pub(crate) fn aa_odd(
    lat: &mut FullLattice,
    width: usize,
    p: &TrtParams,
    g: &BodyForce,
    pool: &WorkerPool,
) -> SweepStats {
    let a = lat.shared(lat.current());
    let stats = match (lat.layout(), width) {
        (Layout::AoS, _) => aa_odd_sweep::<Aos, 1>(lat, a, p, g, pool),
        (Layout::SoA, 1) => aa_odd_sweep::<Soa, 1>(lat, a, p, g, pool),
        (Layout::SoA, 2) => aa_odd_sweep::<Soa, 2>(lat, a, p, g, pool),
        (Layout::SoA, 4) => aa_odd_sweep::<Soa, 4>(lat, a, p, g, pool),
        (Layout::SoA, 8) => aa_odd_sweep::<Soa, 8>(lat, a, p, g, pool),
        (Layout::SoA, _) => aa_odd_sweep::<Soa, 16>(lat, a, p, g, pool),
    };
    lat.correction_step(pool);
    stats
}

fn aa_odd_sweep<I: Index, const L: usize>(
    lat: &FullLattice,
    a: SharedMut<f64>,
    p: &TrtParams,
    g: &BodyForce,
    pool: &WorkerPool,
) -> SweepStats {
    let dims = lat.dims();
    let nz = dims.nz;
    let stride = lat.stride();
    let flags = lat.flags().flags();
    let stats = pool.map(|w| {
        let mut st = SweepStats::default();
        lat.for_each_segment(w, |x, y, z0, z1| {
            let nb = line_bases(dims, x, y);
            let mut z = z0;
            // SAFETY (whole block): node x reads slot opp(d) of x - c_d and
            // writes slot d of x + c_d; both sets belong to x alone.
            unsafe {
                while L > 1 && z + L <= z1 {
                    let cell = nb[0] + z;
                    let interior = z >= 1 && z + L < nz;
                    if interior && (0..L).all(|l| flags[cell + l] == NodeType::Fluid) {
                        let mut q = [[0.0f64; L]; Q];
                        for d in 0..Q {
                            let from = nb[OPP[d]] + (z as i64 - C[d][2] as i64) as usize;
                            for l in 0..L {
                                q[d][l] = a.read(I::idx(from + l, OPP[d], stride));
                            }
                        }
                        collide_lanes::<L>(&mut q, p, g);
                        for d in 0..Q {
                            let to = nb[d] + (z as i64 + C[d][2] as i64) as usize;
                            for l in 0..L {
                                a.write(I::idx(to + l, d, stride), q[d][l]);
                            }
                        }
                        st.vector_nodes += L as u64;
                    } else {
                        for l in 0..L {
                            if flags[cell + l] == NodeType::Fluid {
                                odd_node::<I>(a, &nb, z + l, nz, stride, p, g);
                            }
                        }
                        st.scalar_nodes += L as u64;
                    }
                    z += L;
                }
                while z < z1 {
                    if flags[nb[0] + z] == NodeType::Fluid {
                        odd_node::<I>(a, &nb, z, nz, stride, p, g);
                    }
                    st.scalar_nodes += 1;
                    z += 1;
                }
            }
        });
        st
    });
    stats.into_iter().sum()
}

#[inline(always)]
unsafe fn odd_node<I: Index>(
    a: SharedMut<f64>,
    nb: &[usize; Q],
    z: usize,
    nz: usize,
    stride: usize,
    p: &TrtParams,
    g: &BodyForce,
) {
    let mut q = [[0.0f64; 1]; Q];
    for d in 0..Q {
        let from = nb[OPP[d]] + wrap_z(z, -C[d][2], nz);
        q[d][0] = a.read(I::idx(from, OPP[d], stride));
    }
    collide_lanes::<1>(&mut q, p, g);
    for d in 0..Q {
        let to = nb[d] + wrap_z(z, C[d][2], nz);
        a.write(I::idx(to, d, stride), q[d][0]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_z_cases() {
        assert_eq!(wrap_z(0, -1, 5), 4);
        assert_eq!(wrap_z(4, 1, 5), 0);
        assert_eq!(wrap_z(2, 1, 5), 3);
        assert_eq!(wrap_z(2, 0, 5), 2);
    }

    #[test]
    fn line_bases_wrap() {
        let dims = Dims::new(3, 4, 5);
        let nb = line_bases(dims, 0, 3);
        // direction 8 is (-1,-1,0)
        assert_eq!(nb[8], dims.cell(2, 2, 0));
        // direction 7 is (1,1,0)
        assert_eq!(nb[7], dims.cell(1, 0, 0));
    }
}
