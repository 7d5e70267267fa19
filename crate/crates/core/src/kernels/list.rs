//! Sweeps over fluid-only list lattices.
//!
//! Bounce-back happens inside the update: adjacency entries of links that
//! hit a wall point at the node's own opposite slot.

use crate::d3q19::{collide_lanes, BodyForce, TrtParams, OPP, Q};
use crate::lattice::{Layout, ListLattice, ListTopology, ADJ_PER_NODE};
use crate::pool::WorkerPool;
use crate::storage::SharedMut;

use super::nt::{store_fence, stream_f64};
use super::SweepStats;

/// Nodes per strip of the split kernels.
pub const STRIP: usize = 64;

/// `slot(n, d) = offs[d] + n * mul` for both layouts.
#[derive(Clone, Copy)]
struct SlotMap {
    offs: [usize; Q],
    mul: usize,
}

impl SlotMap {
    fn of(topo: &ListTopology) -> Self {
        match topo.layout() {
            Layout::SoA => SlotMap { offs: *topo.offsets(), mul: 1 },
            Layout::AoS => SlotMap { offs: std::array::from_fn(|d| d), mul: Q },
        }
    }

    #[inline(always)]
    fn slot(&self, n: usize, d: usize) -> usize {
        self.offs[d] + n * self.mul
    }
}

#[inline(always)]
fn adj(a: &[u32], n: usize, d: usize) -> usize {
    a[n * ADJ_PER_NODE + d - 1] as usize
}

/// One-step push: own slots in, adjacency (scatter) out.
pub(crate) fn push(lat: &mut ListLattice, p: &TrtParams, g: &BodyForce, pool: &WorkerPool) {
    let cur = lat.current();
    let src = lat.shared(cur);
    let dst = lat.shared(cur ^ 1);
    let topo = lat.topology();
    let sm = SlotMap::of(topo);
    let a = topo.adjacency();
    pool.run(|w| {
        for n in topo.partitions()[w].clone() {
            let mut q = [[0.0f64; 1]; Q];
            // SAFETY: the scatter entries of distinct nodes are distinct and
            // the source buffer is read-only during the sweep.
            unsafe {
                for d in 0..Q {
                    q[d][0] = src.read(sm.slot(n, d));
                }
                collide_lanes::<1>(&mut q, p, g);
                dst.write(sm.slot(n, 0), q[0][0]);
                for d in 1..Q {
                    dst.write(adj(a, n, d), q[d][0]);
                }
            }
        }
    });
    lat.swap_buffers();
}

/// One-step pull: adjacency (gather) in, own slots out.
pub(crate) fn pull(lat: &mut ListLattice, p: &TrtParams, g: &BodyForce, pool: &WorkerPool) {
    let cur = lat.current();
    let src = lat.shared(cur);
    let dst = lat.shared(cur ^ 1);
    let topo = lat.topology();
    let sm = SlotMap::of(topo);
    let a = topo.adjacency();
    pool.run(|w| {
        for n in topo.partitions()[w].clone() {
            let mut q = [[0.0f64; 1]; Q];
            // SAFETY: every node writes only its own slots.
            unsafe {
                gather(src, a, &sm, n, &mut q);
                collide_lanes::<1>(&mut q, p, g);
                for d in 0..Q {
                    dst.write(sm.slot(n, d), q[d][0]);
                }
            }
        }
    });
    lat.swap_buffers();
}

#[inline(always)]
unsafe fn gather(src: SharedMut<f64>, a: &[u32], sm: &SlotMap, n: usize, q: &mut [[f64; 1]; Q]) {
    q[0][0] = src.read(sm.slot(n, 0));
    for d in 1..Q {
        q[d][0] = src.read(adj(a, n, d));
    }
}

/// Strip-mined pull: results of `STRIP` nodes are staged and written back
/// per direction with cache-bypassing stores, one or two streams at a time.
pub(crate) fn pull_split(lat: &mut ListLattice, streams: usize, p: &TrtParams, g: &BodyForce, pool: &WorkerPool) {
    let cur = lat.current();
    let src = lat.shared(cur);
    let dst = lat.shared(cur ^ 1);
    let topo = lat.topology();
    debug_assert_eq!(topo.layout(), Layout::SoA);
    let sm = SlotMap::of(topo);
    let a = topo.adjacency();
    pool.run(|w| {
        let range = topo.partitions()[w].clone();
        let mut stage = [[0.0f64; STRIP]; Q];
        let mut n0 = range.start;
        while n0 < range.end {
            let len = STRIP.min(range.end - n0);
            for k in 0..len {
                let mut q = [[0.0f64; 1]; Q];
                // SAFETY: reads from the source buffer only.
                unsafe { gather(src, a, &sm, n0 + k, &mut q) };
                collide_lanes::<1>(&mut q, p, g);
                for d in 0..Q {
                    stage[d][k] = q[d][0];
                }
            }
            let base = dst.as_ptr();
            // SAFETY: slots n0..n0+len of each direction belong to this worker.
            unsafe {
                if streams == 1 {
                    for d in 0..Q {
                        let out = base.add(sm.offs[d] + n0);
                        for k in 0..len {
                            stream_f64(out.add(k), stage[d][k]);
                        }
                    }
                } else {
                    let mut d = 0;
                    while d + 1 < Q {
                        let o1 = base.add(sm.offs[d] + n0);
                        let o2 = base.add(sm.offs[d + 1] + n0);
                        for k in 0..len {
                            stream_f64(o1.add(k), stage[d][k]);
                            stream_f64(o2.add(k), stage[d + 1][k]);
                        }
                        d += 2;
                    }
                    let out = base.add(sm.offs[Q - 1] + n0);
                    for k in 0..len {
                        stream_f64(out.add(k), stage[Q - 1][k]);
                    }
                }
            }
            n0 += len;
        }
        store_fence();
    });
    lat.swap_buffers();
}

/// AA even sub-step, `L` nodes at a time where possible (SoA only for `L > 1`).
pub(crate) fn aa_even<const L: usize>(
    lat: &mut ListLattice,
    p: &TrtParams,
    g: &BodyForce,
    pool: &WorkerPool,
) -> SweepStats {
    let buf = lat.shared(lat.current());
    let topo = lat.topology();
    let sm = SlotMap::of(topo);
    let stats = pool.map(|w| {
        let range = topo.partitions()[w].clone();
        let mut st = SweepStats::default();
        let mut n = range.start;
        // SAFETY (whole block): each node touches its own slots only.
        unsafe {
            if L > 1 && sm.mul == 1 {
                while n + L <= range.end {
                    let mut q = [[0.0f64; L]; Q];
                    for d in 0..Q {
                        for l in 0..L {
                            q[d][l] = buf.read(sm.offs[d] + n + l);
                        }
                    }
                    collide_lanes::<L>(&mut q, p, g);
                    for d in 0..Q {
                        for l in 0..L {
                            buf.write(sm.offs[OPP[d]] + n + l, q[d][l]);
                        }
                    }
                    st.vector_nodes += L as u64;
                    n += L;
                }
            }
            while n < range.end {
                let mut q = [[0.0f64; 1]; Q];
                for d in 0..Q {
                    q[d][0] = buf.read(sm.slot(n, d));
                }
                collide_lanes::<1>(&mut q, p, g);
                for d in 0..Q {
                    buf.write(sm.slot(n, OPP[d]), q[d][0]);
                }
                st.scalar_nodes += 1;
                n += 1;
            }
        }
        st
    });
    stats.into_iter().sum()
}

/// AA odd sub-step through the scatter adjacency: node `n` reads the slot it
/// would scatter direction `opp(i)` to and writes the one for `i`.
pub(crate) fn aa_odd(lat: &mut ListLattice, p: &TrtParams, g: &BodyForce, pool: &WorkerPool) -> SweepStats {
    let buf = lat.shared(lat.current());
    let topo = lat.topology();
    let sm = SlotMap::of(topo);
    let a = topo.adjacency();
    let stats = pool.map(|w| {
        let range = topo.partitions()[w].clone();
        for n in range.clone() {
            let mut q = [[0.0f64; 1]; Q];
            // SAFETY: the read and write sets of n coincide and are disjoint
            // from those of every other node.
            unsafe {
                q[0][0] = buf.read(sm.slot(n, 0));
                for i in 1..Q {
                    q[i][0] = buf.read(adj(a, n, OPP[i]));
                }
                collide_lanes::<1>(&mut q, p, g);
                buf.write(sm.slot(n, 0), q[0][0]);
                for i in 1..Q {
                    buf.write(adj(a, n, i), q[i][0]);
                }
            }
        }
        SweepStats { vector_nodes: 0, scalar_nodes: range.len() as u64 }
    });
    stats.into_iter().sum()
}

/// AA odd sub-step over the run-length coding. Each run resolves its
/// relative pattern once; `L > 1` additionally processes `L` consecutive
/// nodes of a run as lanes.
pub(crate) fn aa_odd_ria<const L: usize>(
    lat: &mut ListLattice,
    p: &TrtParams,
    g: &BodyForce,
    pool: &WorkerPool,
) -> SweepStats {
    let buf = lat.shared(lat.current());
    let topo = lat.topology();
    let sm = SlotMap::of(topo);
    debug_assert_eq!(sm.mul, 1);
    let ria = lat.ria().expect("ria kernels are built with a run coding");
    let runs = ria.runs();
    let groups = ria.run_partitions(pool.workers());
    let stats = pool.map(|w| {
        let mut st = SweepStats::default();
        for r in &runs[groups[w].clone()] {
            let rd: [isize; Q] = std::array::from_fn(|d| if d == 0 { 0 } else { r.pattern[d - 1] as isize });
            let read: [isize; Q] = std::array::from_fn(|i| if i == 0 { sm.offs[0] as isize } else { rd[OPP[i]] });
            let write: [isize; Q] = std::array::from_fn(|i| if i == 0 { sm.offs[0] as isize } else { rd[i] });
            let start = r.start as usize;
            let end = start + r.len as usize;
            let mut n = start;
            // SAFETY (whole block): same access sets as the plain odd step.
            unsafe {
                while L > 1 && n + L <= end {
                    let mut q = [[0.0f64; L]; Q];
                    for i in 0..Q {
                        let from = (n as isize + read[i]) as usize;
                        for l in 0..L {
                            q[i][l] = buf.read(from + l);
                        }
                    }
                    collide_lanes::<L>(&mut q, p, g);
                    for i in 0..Q {
                        let to = (n as isize + write[i]) as usize;
                        for l in 0..L {
                            buf.write(to + l, q[i][l]);
                        }
                    }
                    st.vector_nodes += L as u64;
                    n += L;
                }
                while n < end {
                    let mut q = [[0.0f64; 1]; Q];
                    for i in 0..Q {
                        q[i][0] = buf.read((n as isize + read[i]) as usize);
                    }
                    collide_lanes::<1>(&mut q, p, g);
                    for i in 0..Q {
                        buf.write((n as isize + write[i]) as usize, q[i][0]);
                    }
                    st.scalar_nodes += 1;
                    n += 1;
                }
            }
        }
        st
    });
    stats.into_iter().sum()
}
