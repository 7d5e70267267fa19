use std::ops::Range;
use std::sync::Arc;

use crate::d3q19::{NodePdfs, C, OPP, Q, W};
use crate::error::{Error, Result};
use crate::geometry::{Dims, FlagField};
use crate::pool::{partition, WorkerPool};
use crate::storage::{PageBuf, SharedMut};

use super::Layout;

/// Cells owned by one worker of a full-array sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FullPartition {
    /// Contiguous range of the collapsed x-y-z iteration space.
    Cells(Range<usize>),
    /// Slab of x layers, tiled with the blocking factor.
    Slab(Range<usize>),
}

/// Dense PDF storage over the whole box, fluid and solid nodes alike.
///
/// Index maps: AoS `cell*19 + d`, SoA `d*stride + cell` where
/// `stride = nx*ny*nz + dir_pad`. Propagation wraps modulo the box on every
/// axis; non-periodic axes must therefore be closed by solid boundary layers.
pub struct FullLattice {
    flags: Arc<FlagField>,
    dims: Dims,
    layout: Layout,
    stride: usize,
    bufs: Vec<PageBuf<f64>>,
    current: usize,
    blk: usize,
    parts: Vec<FullPartition>,
    solids: Vec<Vec<usize>>,
}

impl std::fmt::Debug for FullLattice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FullLattice")
            .field("dims", &self.dims)
            .field("layout", &self.layout)
            .field("buffers", &self.bufs.len())
            .field("blk", &self.blk)
            .finish()
    }
}

impl FullLattice {
    /// Allocates `buffers` dense lattices and sets every node to the rest
    /// equilibrium. Each worker initializes exactly the cells it updates
    /// later. `dir_pad` inserts unused elements between SoA direction arrays.
    pub fn init_full(
        flags: Arc<FlagField>,
        layout: Layout,
        buffers: usize,
        blk: usize,
        dir_pad: usize,
        pool: &WorkerPool,
    ) -> Result<Self> {
        if !(1..=2).contains(&buffers) {
            return Err(Error::config(format!("full lattice needs 1 or 2 buffers, got {buffers}")));
        }
        check_closed_boundaries(&flags)?;
        let dims = flags.dims();
        let cells = dims.cells();
        let stride = match layout {
            Layout::AoS => cells,
            Layout::SoA => cells + dir_pad,
        };
        let len = match layout {
            Layout::AoS => cells * Q,
            Layout::SoA => stride * Q,
        };
        let bufs = (0..buffers).map(|_| PageBuf::zeroed(len)).collect::<Result<Vec<_>>>()?;
        let workers = pool.workers();
        let parts: Vec<FullPartition> = (0..workers)
            .map(|w| {
                if blk == 0 {
                    FullPartition::Cells(partition(cells, workers, w))
                } else {
                    FullPartition::Slab(partition(dims.nx, workers, w))
                }
            })
            .collect();
        let mut lat = FullLattice {
            flags,
            dims,
            layout,
            stride,
            bufs,
            current: 0,
            blk,
            parts,
            solids: Vec::new(),
        };
        let views: Vec<SharedMut<f64>> = lat.bufs.iter_mut().map(|b| b.as_shared()).collect();
        let this = &lat;
        let solids = pool.map(|w| {
            let mut solid = Vec::new();
            this.for_each_segment(w, |x, y, z0, z1| {
                for z in z0..z1 {
                    let cell = this.dims.cell(x, y, z);
                    for v in &views {
                        for d in 0..Q {
                            // SAFETY: cell belongs to worker w's partition.
                            unsafe { v.write(this.index(cell, d), W[d]) };
                        }
                    }
                    if !this.flags.is_fluid_cell(cell) {
                        solid.push(cell);
                    }
                }
            });
            solid
        });
        lat.solids = solids;
        Ok(lat)
    }

    pub fn flags(&self) -> &Arc<FlagField> {
        &self.flags
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn blk(&self) -> usize {
        self.blk
    }

    pub fn buffers(&self) -> usize {
        self.bufs.len()
    }

    pub fn partitions(&self) -> &[FullPartition] {
        &self.parts
    }

    pub fn huge_pages(&self) -> bool {
        self.bufs.iter().all(|b| b.huge_pages())
    }

    /// Element index of direction `d` at linear cell `cell`.
    #[inline(always)]
    pub fn index(&self, cell: usize, d: usize) -> usize {
        match self.layout {
            Layout::AoS => cell * Q + d,
            Layout::SoA => d * self.stride + cell,
        }
    }

    pub fn index_xyz(&self, x: usize, y: usize, z: usize, d: usize) -> usize {
        self.index(self.dims.cell(x, y, z), d)
    }

    pub(crate) fn stride(&self) -> usize {
        self.stride
    }

    /// Index of the buffer holding the current state.
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

    /// Raw stored values of a cell in the current buffer.
    pub fn raw_pdfs(&self, cell: usize) -> NodePdfs {
        let b = &self.bufs[self.current];
        std::array::from_fn(|d| b[self.index(cell, d)])
    }

    pub fn set_raw_pdfs(&mut self, cell: usize, f: &NodePdfs) {
        let idx: [usize; Q] = std::array::from_fn(|d| self.index(cell, d));
        let b = &mut self.bufs[self.current];
        for d in 0..Q {
            b[idx[d]] = f[d];
        }
    }

    /// Linear cell reached from `cell` along `c[d]`, wrapping on all axes.
    #[inline]
    pub fn wrap_neighbor(&self, cell: usize, d: usize) -> usize {
        let [x, y, z] = self.dims.coord(cell);
        let n = self.dims.as_array();
        let w = |v: usize, c: i32, len: usize| (v as i64 + c as i64).rem_euclid(len as i64) as usize;
        self.dims.cell(w(x, C[d][0], n[0]), w(y, C[d][1], n[1]), w(z, C[d][2], n[2]))
    }

    /// Full-way bounce-back: swaps `f[i]` and `f[opp(i)]` on every solid
    /// node of the current buffer. Periodicity needs no action because
    /// propagation wraps.
    pub fn correction_step(&mut self, pool: &WorkerPool) {
        let cur = self.current;
        let v = self.bufs[cur].as_shared();
        let this = &*self;
        pool.run(|w| {
            for &cell in &this.solids[w] {
                for i in (1..Q).step_by(2) {
                    let a = this.index(cell, i);
                    let b = this.index(cell, OPP[i]);
                    // SAFETY: solid cells are partitioned disjointly over workers.
                    unsafe {
                        let t = v.read(a);
                        v.write(a, v.read(b));
                        v.write(b, t);
                    }
                }
            }
        });
    }

    /// Visits the z-line segments owned by worker `w` in sweep order.
    pub(crate) fn for_each_segment(&self, w: usize, mut f: impl FnMut(usize, usize, usize, usize)) {
        let Dims { ny, nz, .. } = self.dims;
        match &self.parts[w] {
            FullPartition::Cells(r) => {
                let mut cell = r.start;
                while cell < r.end {
                    let [x, y, z] = self.dims.coord(cell);
                    let len = (nz - z).min(r.end - cell);
                    f(x, y, z, z + len);
                    cell += len;
                }
            }
            FullPartition::Slab(xr) => {
                let b = if self.blk == 0 { usize::MAX } else { self.blk };
                let mut bx = xr.start;
                while bx < xr.end {
                    let ex = bx.saturating_add(b).min(xr.end);
                    let mut by = 0;
                    while by < ny {
                        let ey = by.saturating_add(b).min(ny);
                        let mut bz = 0;
                        while bz < nz {
                            let ez = bz.saturating_add(b).min(nz);
                            for x in bx..ex {
                                for y in by..ey {
                                    f(x, y, bz, ez);
                                }
                            }
                            bz = ez;
                        }
                        by = ey;
                    }
                    bx = ex;
                }
            }
        }
    }
}

/// Wrapping propagation is only correct when fluid never touches a
/// non-periodic face of the box.
fn check_closed_boundaries(ff: &FlagField) -> Result<()> {
    let dims = ff.dims();
    let n = dims.as_array();
    let periodic = ff.periodic();
    for (cell, _) in ff.flags().iter().enumerate().filter(|(c, _)| ff.is_fluid_cell(*c)) {
        let p = dims.coord(cell);
        for a in 0..3 {
            if !periodic[a] && (p[a] == 0 || p[a] == n[a] - 1) {
                return Err(Error::config(format!(
                    "full-array lattices need solid layers on non-periodic faces; fluid node at {p:?}"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_geometry, GeometrySpec};

    fn lattice(layout: Layout, blk: usize, workers: usize) -> FullLattice {
        let ff = Arc::new(build_geometry(&GeometrySpec::blocks(4, 4, 4, 2, 2)).unwrap());
        let pool = WorkerPool::new(workers, None).unwrap();
        FullLattice::init_full(ff, layout, 2, blk, 0, &pool).unwrap()
    }

    #[test]
    fn init_sets_weights_everywhere() {
        for layout in [Layout::AoS, Layout::SoA] {
            let lat = lattice(layout, 0, 2);
            for cell in 0..lat.dims().cells() {
                assert_eq!(lat.raw_pdfs(cell), W);
            }
            for b in 0..2 {
                assert!(lat.buffer(b).iter().all(|v| *v > 0.0));
            }
        }
    }

    #[test]
    fn index_formulas() {
        let aos = lattice(Layout::AoS, 0, 1);
        assert_eq!(aos.index_xyz(0, 0, 0, 5), 5);
        assert_eq!(aos.index_xyz(0, 0, 1, 0), 19);
        let soa = lattice(Layout::SoA, 0, 1);
        assert_eq!(soa.index_xyz(0, 0, 1, 1), 64 + 1);
    }

    #[test]
    fn index_maps_are_bijections() {
        for layout in [Layout::AoS, Layout::SoA] {
            let lat = lattice(layout, 0, 1);
            let mut seen = vec![false; 19 * 64];
            for cell in 0..64 {
                for d in 0..Q {
                    let i = lat.index(cell, d);
                    assert!(!seen[i]);
                    seen[i] = true;
                }
            }
            assert!(seen.iter().all(|s| *s));
        }
    }

    #[test]
    fn segments_cover_box_once() {
        for blk in [0, 1, 3, 8] {
            for workers in [1, 3] {
                let lat = lattice(Layout::SoA, blk, workers);
                let mut hits = [0u8; 64];
                for w in 0..workers.min(lat.partitions().len()) {
                    lat.for_each_segment(w, |x, y, z0, z1| {
                        for z in z0..z1 {
                            hits[lat.dims().cell(x, y, z)] += 1;
                        }
                    });
                }
                assert!(hits.iter().all(|h| *h == 1), "blk={blk} workers={workers}");
            }
        }
    }

    #[test]
    fn correction_swaps_and_is_involution() {
        let pool = WorkerPool::single();
        let mut lat = lattice(Layout::AoS, 0, 1);
        let ff = lat.flags().clone();
        let solid = (0..64).find(|&c| !ff.is_fluid_cell(c)).unwrap();
        let fluid = (0..64).find(|&c| ff.is_fluid_cell(c)).unwrap();
        let mut f = W;
        f[1] = 0.7;
        f[2] = 0.2;
        lat.set_raw_pdfs(solid, &f);
        lat.set_raw_pdfs(fluid, &f);
        let before: Vec<f64> = lat.buffer(0).to_vec();
        lat.correction_step(&pool);
        assert_eq!(lat.raw_pdfs(solid)[1], 0.2);
        assert_eq!(lat.raw_pdfs(solid)[2], 0.7);
        assert_eq!(lat.raw_pdfs(fluid), f);
        lat.correction_step(&pool);
        assert!(before.iter().zip(lat.buffer(0)).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn open_faces_rejected() {
        let ff = Arc::new(FlagField::all_fluid(Dims::new(4, 4, 4), [true, false, true]).unwrap());
        let pool = WorkerPool::single();
        assert!(FullLattice::init_full(ff.clone(), Layout::SoA, 2, 0, 0, &pool).is_err());
        let closed = Arc::new(FlagField::all_fluid(Dims::new(4, 4, 4), [true; 3]).unwrap());
        assert!(FullLattice::init_full(closed.clone(), Layout::SoA, 3, 0, 0, &pool).is_err());
        assert!(FullLattice::init_full(closed, Layout::SoA, 1, 0, 0, &pool).is_ok());
    }

    #[test]
    fn wrap_neighbor_matches_geometry_step() {
        let lat = lattice(Layout::SoA, 0, 1);
        let ff = lat.flags().clone();
        for cell in 0..64 {
            for d in 0..Q {
                let t = ff.step(lat.dims().coord(cell), d).unwrap();
                assert_eq!(lat.wrap_neighbor(cell, d), lat.dims().cell(t[0], t[1], t[2]));
            }
        }
    }
}
