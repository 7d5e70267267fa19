use std::ops::Range;
use std::sync::Arc;

use crate::d3q19::{NodePdfs, OPP, Q, W};
use crate::error::{Error, Result};
use crate::geometry::{Dims, FlagField, Neighbor};
use crate::pool::{partition, WorkerPool};
use crate::storage::{PageBuf, SharedMut};

use super::padding::{padding_offsets, PaddingPolicy};
use super::ria::RiaCoding;
use super::{Layout, Orientation, ADJ_PER_NODE};

const NO_NODE: u32 = u32::MAX;

/// Fluid nodes in update order, as linear cell indices.
///
/// `blk == 0`: x outermost, z innermost. `blk > 0`: the y-z plane is tiled
/// into `blk x blk` tiles; per tile all x layers are visited in turn.
pub fn order_nodes(ff: &FlagField, blk: usize) -> Vec<usize> {
    let Dims { nx, ny, nz } = ff.dims();
    let mut out = Vec::with_capacity(ff.fluid_count());
    let mut emit = |x: usize, y: usize, z: usize| {
        let c = ff.dims().cell(x, y, z);
        if ff.is_fluid_cell(c) {
            out.push(c);
        }
    };
    if blk == 0 {
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    emit(x, y, z);
                }
            }
        }
    } else {
        for ty in (0..ny).step_by(blk) {
            for tz in (0..nz).step_by(blk) {
                for x in 0..nx {
                    for y in ty..(ty + blk).min(ny) {
                        for z in tz..(tz + blk).min(nz) {
                            emit(x, y, z);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Node ordering, slot layout and adjacency list of a list lattice,
/// without the PDF buffers.
pub struct ListTopology {
    flags: Arc<FlagField>,
    layout: Layout,
    blk: usize,
    padding: PaddingPolicy,
    cells: Vec<usize>,
    node_of_cell: Vec<u32>,
    offsets: [usize; Q],
    slots: usize,
    orientation: Orientation,
    adjacency: PageBuf<u32>,
    parts: Vec<Range<usize>>,
}

impl std::fmt::Debug for ListTopology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ListTopology")
            .field("n_fluid", &self.cells.len())
            .field("layout", &self.layout)
            .field("blk", &self.blk)
            .field("padding", &self.padding)
            .field("orientation", &self.orientation)
            .finish()
    }
}

impl ListTopology {
    /// Orders the fluid nodes, lays out the slots and builds one adjacency
    /// orientation. Padding applies to SoA only; AoS ignores it.
    pub fn build(
        flags: Arc<FlagField>,
        layout: Layout,
        blk: usize,
        padding: &PaddingPolicy,
        orientation: Orientation,
        pool: &WorkerPool,
    ) -> Result<Self> {
        let cells = order_nodes(&flags, blk);
        let n = cells.len();
        if n == 0 {
            return Err(Error::config("geometry has no fluid nodes"));
        }
        if n >= NO_NODE as usize {
            return Err(Error::config(format!("{n} fluid nodes exceed 32-bit node indices")));
        }
        let mut node_of_cell = vec![NO_NODE; flags.dims().cells()];
        for (i, &c) in cells.iter().enumerate() {
            node_of_cell[c] = i as u32;
        }
        let (offsets, slots, padding) = match layout {
            Layout::SoA => {
                let off = padding_offsets(n, padding)?;
                (off, off[Q - 1] + n, padding.clone())
            }
            Layout::AoS => (std::array::from_fn(|d| d), n * Q, PaddingPolicy::None),
        };
        if slots > u32::MAX as usize {
            return Err(Error::config(format!(
                "{slots} PDF slots exceed the 4-byte adjacency range; use --padding none"
            )));
        }
        let workers = pool.workers();
        let parts = (0..workers).map(|w| partition(n, workers, w)).collect();
        let adjacency = PageBuf::zeroed(n * ADJ_PER_NODE)?;
        let mut topo = ListTopology {
            flags,
            layout,
            blk,
            padding,
            cells,
            node_of_cell,
            offsets,
            slots,
            orientation,
            adjacency,
            parts,
        };
        let view = topo.adjacency.as_shared();
        let this = &topo;
        pool.run(|w| {
            for node in this.parts[w].clone() {
                for d in 1..Q {
                    let e = this.compute_entry(node, d, orientation);
                    // SAFETY: node belongs to worker w.
                    unsafe { view.write(node * ADJ_PER_NODE + d - 1, e) };
                }
            }
        });
        Ok(topo)
    }

    fn compute_entry(&self, node: usize, d: usize, orientation: Orientation) -> u32 {
        let dims = self.flags.dims();
        let coord = dims.coord(self.cells[node]);
        let dir = match orientation {
            Orientation::Gather => OPP[d],
            Orientation::Scatter => d,
        };
        let slot = match self.flags.neighbor(coord, dir) {
            Neighbor::Node(t) => {
                let m = self.node_of_cell[dims.cell(t[0], t[1], t[2])] as usize;
                self.slot(m, d)
            }
            Neighbor::SolidHit | Neighbor::Outside => self.slot(node, OPP[d]),
        };
        slot as u32
    }

    pub fn flags(&self) -> &Arc<FlagField> {
        &self.flags
    }

    pub fn n_fluid(&self) -> usize {
        self.cells.len()
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn blk(&self) -> usize {
        self.blk
    }

    /// Effective padding (always `None` for AoS).
    pub fn padding(&self) -> &PaddingPolicy {
        &self.padding
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Direction start offsets (SoA) or `d` (AoS).
    pub fn offsets(&self) -> &[usize; Q] {
        &self.offsets
    }

    /// Number of allocated PDF slots per buffer, padding included.
    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Linear cell of each node, in storage order.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn node_of_cell(&self, cell: usize) -> Option<usize> {
        match self.node_of_cell[cell] {
            NO_NODE => None,
            n => Some(n as usize),
        }
    }

    pub fn node_at(&self, coord: [usize; 3]) -> Option<usize> {
        self.node_of_cell(self.flags.dims().cell(coord[0], coord[1], coord[2]))
    }

    /// Slot index of direction `d` of node `n`.
    #[inline(always)]
    pub fn slot(&self, n: usize, d: usize) -> usize {
        match self.layout {
            Layout::SoA => self.offsets[d] + n,
            Layout::AoS => n * Q + d,
        }
    }

    /// Reference point of node `n` for relative (RIA) offsets.
    #[inline(always)]
    pub fn base(&self, n: usize) -> usize {
        match self.layout {
            Layout::SoA => n,
            Layout::AoS => n * Q,
        }
    }

    /// Adjacency entry of node `n`, direction `d` in `1..19`.
    #[inline(always)]
    pub fn adj(&self, n: usize, d: usize) -> usize {
        self.adjacency[n * ADJ_PER_NODE + d - 1] as usize
    }

    /// The raw adjacency list, 18 entries per node.
    pub fn adjacency(&self) -> &[u32] {
        &self.adjacency
    }

    pub fn partitions(&self) -> &[Range<usize>] {
        &self.parts
    }

    pub(crate) fn set_partitions(&mut self, parts: Vec<Range<usize>>) {
        self.parts = parts;
    }

    pub fn huge_pages(&self) -> bool {
        self.adjacency.huge_pages()
    }
}

/// Fluid-only lattice: topology plus one or two PDF buffers, optionally
/// with the run-length coding of its adjacency.
pub struct ListLattice {
    topo: ListTopology,
    bufs: Vec<PageBuf<f64>>,
    current: usize,
    ria: Option<RiaCoding>,
}

impl std::fmt::Debug for ListLattice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ListLattice")
            .field("topology", &self.topo)
            .field("buffers", &self.bufs.len())
            .field("ria_runs", &self.ria.as_ref().map(|r| r.runs().len()))
            .finish()
    }
}

impl ListLattice {
    /// Builds a list lattice. With `ria`, the run-length coding is derived
    /// from the adjacency and the worker partitions are moved to run
    /// boundaries before the PDFs are first touched.
    #[allow(clippy::too_many_arguments)]
    pub fn build_list(
        flags: Arc<FlagField>,
        layout: Layout,
        blk: usize,
        padding: &PaddingPolicy,
        orientation: Orientation,
        buffers: usize,
        ria: bool,
        pool: &WorkerPool,
    ) -> Result<Self> {
        if !(1..=2).contains(&buffers) {
            return Err(Error::config(format!("list lattice needs 1 or 2 buffers, got {buffers}")));
        }
        let mut topo = ListTopology::build(flags, layout, blk, padding, orientation, pool)?;
        let ria = if ria {
            let coding = RiaCoding::build_ria(&topo);
            topo.set_partitions(coding.node_partitions(pool.workers()));
            Some(coding)
        } else {
            None
        };
        let bufs = (0..buffers).map(|_| PageBuf::zeroed(topo.slots())).collect::<Result<Vec<_>>>()?;
        let mut lat = ListLattice { topo, bufs, current: 0, ria };
        let views: Vec<SharedMut<f64>> = lat.bufs.iter_mut().map(|b| b.as_shared()).collect();
        let topo = &lat.topo;
        pool.run(|w| {
            for n in topo.partitions()[w].clone() {
                for v in &views {
                    for d in 0..Q {
                        // SAFETY: slots of node n belong to worker w.
                        unsafe { v.write(topo.slot(n, d), W[d]) };
                    }
                }
            }
        });
        Ok(lat)
    }

    pub fn topology(&self) -> &ListTopology {
        &self.topo
    }

    pub fn ria(&self) -> Option<&RiaCoding> {
        self.ria.as_ref()
    }

    pub fn n_fluid(&self) -> usize {
        self.topo.n_fluid()
    }

    pub fn buffers(&self) -> usize {
        self.bufs.len()
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub(crate) fn swap_buffers(&mut self) {
        if self.bufs.len() == 2 {
            self.current ^= 1;
        }
    }

    pub fn buffer(&self, i: usize) -> &[f64] {
        &self.bufs[i]
    }

    pub(crate) fn shared(&mut self, i: usize) -> SharedMut<f64> {
        self.bufs[i].as_shared()
    }

    pub fn huge_pages(&self) -> bool {
        self.topo.huge_pages() && self.bufs.iter().all(|b| b.huge_pages())
    }

    /// Stored values of node `n` in the current buffer.
    pub fn raw_pdfs(&self, n: usize) -> NodePdfs {
        let b = &self.bufs[self.current];
        std::array::from_fn(|d| b[self.topo.slot(n, d)])
    }

    pub fn set_raw_pdfs(&mut self, n: usize, f: &NodePdfs) {
        let slots: [usize; Q] = std::array::from_fn(|d| self.topo.slot(n, d));
        let b = &mut self.bufs[self.current];
        for d in 0..Q {
            b[slots[d]] = f[d];
        }
    }

    pub(crate) fn raw_slot(&self, slot: usize) -> f64 {
        self.bufs[self.current][slot]
    }

    pub(crate) fn set_raw_slot(&mut self, slot: usize, v: f64) {
        let cur = self.current;
        self.bufs[cur][slot] = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::d3q19::C;
    use crate::geometry::{build_geometry, GeometrySpec};

    fn pool() -> WorkerPool {
        WorkerPool::new(2, None).unwrap()
    }

    #[test]
    fn unblocked_order_is_lexicographic() {
        let ff = FlagField::all_fluid(Dims::new(2, 2, 2), [true; 3]).unwrap();
        let order: Vec<[usize; 3]> = order_nodes(&ff, 0).iter().map(|&c| ff.dims().coord(c)).collect();
        assert_eq!(&order[..5], &[[0, 0, 0], [0, 0, 1], [0, 1, 0], [0, 1, 1], [1, 0, 0]]);
    }

    #[test]
    fn channel_lines_are_consecutive() {
        let ff = build_geometry(&GeometrySpec::channel(3, 6, 7)).unwrap();
        let order = order_nodes(&ff, 0);
        for seg in order.chunks(5) {
            let first = ff.dims().coord(seg[0]);
            for (k, &c) in seg.iter().enumerate() {
                assert_eq!(ff.dims().coord(c), [first[0], first[1], 1 + k]);
            }
        }
    }

    #[test]
    fn blocked_order_is_permutation() {
        let ff = build_geometry(&GeometrySpec::blocks(6, 6, 6, 2, 1)).unwrap();
        for blk in [1, 2, 4, 50] {
            let mut a = order_nodes(&ff, blk);
            assert_eq!(a.len(), ff.fluid_count());
            a.sort_unstable();
            a.dedup();
            assert_eq!(a.len(), ff.fluid_count());
        }
    }

    #[test]
    fn isolated_node_bounces_everything() {
        let dims = Dims::new(3, 3, 3);
        let ff = FlagField::from_fn(dims, [true; 3], |x, y, z| (x, y, z) != (1, 1, 1)).unwrap();
        for orientation in [Orientation::Gather, Orientation::Scatter] {
            let topo = ListTopology::build(
                Arc::new(ff.clone()),
                Layout::SoA,
                0,
                &PaddingPolicy::None,
                orientation,
                &pool(),
            )
            .unwrap();
            assert_eq!(topo.n_fluid(), 1);
            for d in 1..Q {
                assert_eq!(topo.adj(0, d), topo.slot(0, OPP[d]));
            }
        }
    }

    #[test]
    fn periodic_box_adjacency_matches_coordinate_walk() {
        let ff = Arc::new(FlagField::all_fluid(Dims::new(4, 4, 4), [true; 3]).unwrap());
        for layout in [Layout::SoA, Layout::AoS] {
            let topo = ListTopology::build(
                ff.clone(),
                layout,
                0,
                &PaddingPolicy::Auto,
                Orientation::Scatter,
                &pool(),
            )
            .unwrap();
            for n in 0..64 {
                let [x, y, z] = ff.dims().coord(topo.cells()[n]);
                for d in 1..Q {
                    let t = [
                        (x as i32 + C[d][0]).rem_euclid(4) as usize,
                        (y as i32 + C[d][1]).rem_euclid(4) as usize,
                        (z as i32 + C[d][2]).rem_euclid(4) as usize,
                    ];
                    let m = topo.node_at(t).unwrap();
                    assert_eq!(topo.adj(n, d), topo.slot(m, d));
                }
            }
        }
    }

    #[test]
    fn gather_and_scatter_round_trip() {
        let ff = Arc::new(build_geometry(&GeometrySpec::blocks(8, 8, 8, 3, 2)).unwrap());
        let p = pool();
        let g = ListTopology::build(ff.clone(), Layout::SoA, 0, &PaddingPolicy::None, Orientation::Gather, &p)
            .unwrap();
        let s = ListTopology::build(ff.clone(), Layout::SoA, 0, &PaddingPolicy::None, Orientation::Scatter, &p)
            .unwrap();
        for n in 0..s.n_fluid() {
            let coord = ff.dims().coord(s.cells()[n]);
            for d in 1..Q {
                match ff.neighbor(coord, d) {
                    Neighbor::Node(t) => {
                        let m = s.node_at(t).unwrap();
                        assert_eq!(s.adj(n, d), s.slot(m, d));
                        assert_eq!(g.adj(m, d), g.slot(n, d));
                    }
                    _ => {
                        assert_eq!(s.adj(n, d), s.slot(n, OPP[d]));
                        assert_eq!(g.adj(n, OPP[d]), g.slot(n, d));
                    }
                }
            }
        }
        // scatter is a bijection on the non-rest slots
        let mut hit = vec![false; s.slots()];
        for n in 0..s.n_fluid() {
            for d in 1..Q {
                assert!(!hit[s.adj(n, d)]);
                hit[s.adj(n, d)] = true;
            }
        }
        assert_eq!(hit.iter().filter(|h| **h).count(), 18 * s.n_fluid());
    }

    #[test]
    fn init_touches_only_node_slots() {
        let ff = Arc::new(build_geometry(&GeometrySpec::channel(4, 5, 5)).unwrap());
        let lat = ListLattice::build_list(
            ff,
            Layout::SoA,
            0,
            &PaddingPolicy::Auto,
            Orientation::Scatter,
            2,
            false,
            &pool(),
        )
        .unwrap();
        let n = lat.n_fluid();
        let nonzero = lat.buffer(1).iter().filter(|v| **v != 0.0).count();
        assert_eq!(nonzero, 19 * n);
        for k in 0..n {
            assert_eq!(lat.raw_pdfs(k), W);
        }
    }
}
