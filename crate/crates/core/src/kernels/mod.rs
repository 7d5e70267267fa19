//! The seventeen kernel variants and the solver that drives them.

mod full;
mod list;
mod nt;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::d3q19::{macroscopic, BodyForce, NodePdfs, TrtParams, C, OPP, Q};
use crate::error::{Error, Result};
use crate::geometry::FlagField;
use crate::lattice::{FullLattice, Layout, ListLattice, Orientation, PaddingPolicy};
use crate::pool::WorkerPool;

pub use list::STRIP;
pub use nt::streaming_stores_available;
pub(crate) use nt::{store_fence, stream_f64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Propagation {
    OsPush,
    OsPull,
    Aa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Addressing {
    Direct,
    Indirect,
}

/// Lane widths the chunked kernels are instantiated for.
pub const VECTOR_WIDTHS: [usize; 5] = [1, 2, 4, 8, 16];

pub const DEFAULT_VECTOR_WIDTH: usize = 4;

/// Kernel names, in legend order.
pub const KERNEL_NAMES: [&str; 17] = [
    "blk-push-aos",
    "blk-push-soa",
    "blk-pull-aos",
    "blk-pull-soa",
    "aa-aos",
    "aa-soa",
    "aa-vec-soa",
    "list-push-aos",
    "list-push-soa",
    "list-pull-aos",
    "list-pull-soa",
    "list-pull-split-nt-1s-soa",
    "list-pull-split-nt-2s-soa",
    "list-aa-aos",
    "list-aa-soa",
    "list-aa-ria-soa",
    "list-aa-pv-soa",
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelDescriptor {
    pub name: String,
    pub propagation: Propagation,
    pub layout: Layout,
    pub addressing: Addressing,
    pub blk: usize,
    pub nt_streams: usize,
    pub ria: bool,
    pub pv: bool,
    /// Lane count of the chunked variants (`aa-vec-soa`, `list-aa-pv-soa`).
    pub vector_width: usize,
}

impl KernelDescriptor {
    /// Descriptor of a named kernel with `blk = 0` and the default width.
    pub fn from_name(name: &str) -> Result<Self> {
        use Addressing::*;
        use Layout::*;
        use Propagation::*;
        let (propagation, layout, addressing, nt_streams, ria, pv) = match name {
            "blk-push-aos" => (OsPush, AoS, Direct, 0, false, false),
            "blk-push-soa" => (OsPush, SoA, Direct, 0, false, false),
            "blk-pull-aos" => (OsPull, AoS, Direct, 0, false, false),
            "blk-pull-soa" => (OsPull, SoA, Direct, 0, false, false),
            "aa-aos" => (Aa, AoS, Direct, 0, false, false),
            "aa-soa" | "aa-vec-soa" => (Aa, SoA, Direct, 0, false, false),
            "list-push-aos" => (OsPush, AoS, Indirect, 0, false, false),
            "list-push-soa" => (OsPush, SoA, Indirect, 0, false, false),
            "list-pull-aos" => (OsPull, AoS, Indirect, 0, false, false),
            "list-pull-soa" => (OsPull, SoA, Indirect, 0, false, false),
            "list-pull-split-nt-1s-soa" => (OsPull, SoA, Indirect, 1, false, false),
            "list-pull-split-nt-2s-soa" => (OsPull, SoA, Indirect, 2, false, false),
            "list-aa-aos" => (Aa, AoS, Indirect, 0, false, false),
            "list-aa-soa" => (Aa, SoA, Indirect, 0, false, false),
            "list-aa-ria-soa" => (Aa, SoA, Indirect, 0, true, false),
            "list-aa-pv-soa" => (Aa, SoA, Indirect, 0, true, true),
            _ => {
                return Err(Error::config(format!(
                    "unknown kernel '{name}'; valid names: {}",
                    KERNEL_NAMES.join(", ")
                )))
            }
        };
        Ok(KernelDescriptor {
            name: name.to_string(),
            propagation,
            layout,
            addressing,
            blk: 0,
            nt_streams,
            ria,
            pv,
            vector_width: DEFAULT_VECTOR_WIDTH,
        })
    }

    /// All seventeen kernels in legend order.
    pub fn all() -> Vec<Self> {
        KERNEL_NAMES.iter().map(|n| Self::from_name(n).unwrap()).collect()
    }

    pub fn with_blk(mut self, blk: usize) -> Self {
        self.blk = blk;
        self
    }

    pub fn with_vector_width(mut self, w: usize) -> Self {
        self.vector_width = w;
        self
    }

    /// Whether the kernel processes lanes of `vector_width` nodes.
    pub fn is_chunked(&self) -> bool {
        self.pv || self.name == "aa-vec-soa"
    }

    pub fn is_aa(&self) -> bool {
        self.propagation == Propagation::Aa
    }

    pub fn is_list(&self) -> bool {
        self.addressing == Addressing::Indirect
    }

    /// Checks the option combination against the implemented variants.
    pub fn validate(&self) -> Result<()> {
        let reference = Self::from_name(&self.name)?;
        let same_shape = self.propagation == reference.propagation
            && self.layout == reference.layout
            && self.addressing == reference.addressing
            && self.nt_streams == reference.nt_streams
            && self.ria == reference.ria
            && self.pv == reference.pv;
        if !same_shape {
            return Err(Error::config(format!("options do not match kernel '{}'", self.name)));
        }
        if self.nt_streams > 0
            && !(self.propagation == Propagation::OsPull
                && self.addressing == Addressing::Indirect
                && self.layout == Layout::SoA)
        {
            return Err(Error::config("non-temporal stores need a pull list kernel in SoA layout"));
        }
        if self.nt_streams > 2 {
            return Err(Error::config(format!("--nt-streams must be 0, 1 or 2, got {}", self.nt_streams)));
        }
        if (self.ria || self.pv)
            && !(self.is_aa() && self.addressing == Addressing::Indirect && self.layout == Layout::SoA)
        {
            return Err(Error::config("ria/pv need the AA list kernel in SoA layout"));
        }
        if self.pv && !self.ria {
            return Err(Error::config("pv needs the run coding (ria)"));
        }
        if !VECTOR_WIDTHS.contains(&self.vector_width) {
            return Err(Error::config(format!(
                "vector width must be one of {VECTOR_WIDTHS:?}, got {}",
                self.vector_width
            )));
        }
        Ok(())
    }

    /// Buffers the kernel needs.
    pub fn buffers(&self) -> usize {
        if self.is_aa() {
            1
        } else {
            2
        }
    }
}

impl fmt::Display for KernelDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl FromStr for KernelDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s)
    }
}

/// Which AA sub-step comes next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn name(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepState {
    pub next: Parity,
    pub steps: u64,
}

/// Node updates done in full lane chunks versus one at a time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepStats {
    pub vector_nodes: u64,
    pub scalar_nodes: u64,
}

impl SweepStats {
    pub fn fraction(&self) -> f64 {
        let total = self.vector_nodes + self.scalar_nodes;
        if total == 0 {
            0.0
        } else {
            self.vector_nodes as f64 / total as f64
        }
    }
}

impl std::ops::Add for SweepStats {
    type Output = SweepStats;

    fn add(self, o: SweepStats) -> SweepStats {
        SweepStats {
            vector_nodes: self.vector_nodes + o.vector_nodes,
            scalar_nodes: self.scalar_nodes + o.scalar_nodes,
        }
    }
}

impl std::iter::Sum for SweepStats {
    fn sum<I: Iterator<Item = SweepStats>>(iter: I) -> SweepStats {
        iter.fold(SweepStats::default(), |a, b| a + b)
    }
}

#[derive(Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Lattice {
    Full(FullLattice),
    List(ListLattice),
}

/// A lattice together with the kernel that advances it.
///
/// State is exchanged in a kernel-independent convention: the PDFs a
/// one-step push kernel would hold. For the full-array family that includes
/// the solid nodes, whose slots carry the populations being bounced back.
#[derive(Debug)]
pub struct Solver {
    desc: KernelDescriptor,
    lattice: Lattice,
    params: TrtParams,
    force: BodyForce,
    pool: Arc<WorkerPool>,
    state: SweepState,
    even_stats: SweepStats,
    odd_stats: SweepStats,
}

impl Solver {
    /// Builds the lattice for `desc` on `flags` and sets it to rest.
    /// `padding` applies to list SoA kernels only.
    pub fn new(
        desc: KernelDescriptor,
        flags: Arc<FlagField>,
        padding: &PaddingPolicy,
        params: TrtParams,
        force: BodyForce,
        pool: Arc<WorkerPool>,
    ) -> Result<Self> {
        desc.validate()?;
        let lattice = if desc.is_list() {
            let orientation = match desc.propagation {
                Propagation::OsPull => Orientation::Gather,
                _ => Orientation::Scatter,
            };
            Lattice::List(ListLattice::build_list(
                flags,
                desc.layout,
                desc.blk,
                padding,
                orientation,
                desc.buffers(),
                desc.ria,
                &pool,
            )?)
        } else {
            Lattice::Full(FullLattice::init_full(flags, desc.layout, desc.buffers(), desc.blk, 0, &pool)?)
        };
        Ok(Solver {
            desc,
            lattice,
            params,
            force,
            pool,
            state: SweepState { next: Parity::Even, steps: 0 },
            even_stats: SweepStats::default(),
            odd_stats: SweepStats::default(),
        })
    }

    pub fn descriptor(&self) -> &KernelDescriptor {
        &self.desc
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn params(&self) -> &TrtParams {
        &self.params
    }

    pub fn force(&self) -> &BodyForce {
        &self.force
    }

    pub fn set_force(&mut self, force: BodyForce) {
        self.force = force;
    }

    pub fn pool(&self) -> &Arc<WorkerPool> {
        &self.pool
    }

    pub fn state(&self) -> SweepState {
        self.state
    }

    pub fn flags(&self) -> &Arc<FlagField> {
        match &self.lattice {
            Lattice::Full(l) => l.flags(),
            Lattice::List(l) => l.topology().flags(),
        }
    }

    pub fn n_fluid(&self) -> usize {
        match &self.lattice {
            Lattice::Full(l) => l.flags().fluid_count(),
            Lattice::List(l) => l.n_fluid(),
        }
    }

    /// Whether the split kernels really bypass the cache on this build.
    pub fn streaming_stores(&self) -> bool {
        self.desc.nt_streams > 0 && streaming_stores_available()
    }

    pub fn huge_pages(&self) -> bool {
        match &self.lattice {
            Lattice::Full(l) => l.huge_pages(),
            Lattice::List(l) => l.huge_pages(),
        }
    }

    /// Lane accounting of all even sub-steps so far.
    pub fn even_stats(&self) -> SweepStats {
        self.even_stats
    }

    /// Lane accounting of all odd sub-steps so far.
    pub fn odd_stats(&self) -> SweepStats {
        self.odd_stats
    }

    fn width(&self) -> usize {
        if self.desc.is_chunked() {
            self.desc.vector_width
        } else {
            1
        }
    }

    /// One fused collide-and-stream step of a two-buffer kernel.
    pub fn step_os(&mut self) -> Result<()> {
        let (p, g, pool) = (&self.params, &self.force, &*self.pool);
        match (&mut self.lattice, self.desc.propagation) {
            (_, Propagation::Aa) => return Err(Error::config("step_os called on an AA kernel")),
            (Lattice::Full(l), prop) => full::os_step(l, prop == Propagation::OsPull, p, g, pool),
            (Lattice::List(l), Propagation::OsPush) => list::push(l, p, g, pool),
            (Lattice::List(l), Propagation::OsPull) => match self.desc.nt_streams {
                0 => list::pull(l, p, g, pool),
                s => list::pull_split(l, s, p, g, pool),
            },
        }
        self.state.steps += 1;
        Ok(())
    }

    /// One AA sub-step of the given parity.
    pub fn step_aa(&mut self, parity: Parity) -> Result<()> {
        if !self.desc.is_aa() {
            return Err(Error::config("step_aa called on a one-step kernel"));
        }
        if parity != self.state.next {
            return Err(Error::Parity { expected: self.state.next.name() });
        }
        let width = self.width();
        let (p, g, pool) = (&self.params, &self.force, &*self.pool);
        let stats = match (&mut self.lattice, parity) {
            (Lattice::Full(l), Parity::Even) => full::aa_even(l, width, p, g, pool),
            (Lattice::Full(l), Parity::Odd) => full::aa_odd(l, width, p, g, pool),
            (Lattice::List(l), Parity::Even) => match width {
                1 => list::aa_even::<1>(l, p, g, pool),
                2 => list::aa_even::<2>(l, p, g, pool),
                4 => list::aa_even::<4>(l, p, g, pool),
                8 => list::aa_even::<8>(l, p, g, pool),
                _ => list::aa_even::<16>(l, p, g, pool),
            },
            (Lattice::List(l), Parity::Odd) => match (self.desc.ria, width) {
                (false, _) => list::aa_odd(l, p, g, pool),
                (true, 1) => list::aa_odd_ria::<1>(l, p, g, pool),
                (true, 2) => list::aa_odd_ria::<2>(l, p, g, pool),
                (true, 4) => list::aa_odd_ria::<4>(l, p, g, pool),
                (true, 8) => list::aa_odd_ria::<8>(l, p, g, pool),
                (true, _) => list::aa_odd_ria::<16>(l, p, g, pool),
            },
        };
        match parity {
            Parity::Even => {
                self.even_stats = self.even_stats + stats;
                self.state.next = Parity::Odd;
            }
            Parity::Odd => {
                self.odd_stats = self.odd_stats + stats;
                self.state.next = Parity::Even;
            }
        }
        self.state.steps += 1;
        Ok(())
    }

    /// Checks that `steps` can be applied by this kernel.
    pub fn check_steps(&self, steps: u64) -> Result<()> {
        if self.desc.is_aa() && steps % 2 != 0 {
            return Err(Error::config(format!(
                "AA kernels advance in pairs of steps; got {steps}, use an even count such as {}",
                steps + 1
            )));
        }
        Ok(())
    }

    /// Advances `steps` time steps, ending in the standard convention.
    pub fn advance(&mut self, steps: u64) -> Result<()> {
        self.check_steps(steps)?;
        if self.desc.is_aa() {
            if self.state.next != Parity::Even {
                return Err(Error::Parity { expected: "odd" });
            }
            for _ in 0..steps / 2 {
                self.step_aa(Parity::Even)?;
                self.step_aa(Parity::Odd)?;
            }
        } else {
            for _ in 0..steps {
                self.step_os()?;
            }
        }
        Ok(())
    }

    fn require_standard(&self) -> Result<()> {
        if self.desc.is_aa() && self.state.next != Parity::Even {
            return Err(Error::InvalidState("AA state is only observable after an odd sub-step".into()));
        }
        Ok(())
    }

    /// PDFs of `cell` in the exchange convention. `None` for cells the
    /// lattice does not store (solids of list lattices).
    pub fn pdfs_at(&self, cell: usize) -> Result<Option<NodePdfs>> {
        self.require_standard()?;
        Ok(self.pdfs_unchecked(cell))
    }

    fn pdfs_unchecked(&self, cell: usize) -> Option<NodePdfs> {
        match &self.lattice {
            Lattice::Full(l) => {
                if self.desc.propagation != Propagation::OsPull {
                    return Some(l.raw_pdfs(cell));
                }
                let b = l.buffer(l.current());
                let fluid = l.flags().is_fluid_cell(cell);
                Some(std::array::from_fn(|d| {
                    if fluid {
                        b[l.index(l.wrap_neighbor(cell, OPP[d]), d)]
                    } else {
                        b[l.index(l.wrap_neighbor(cell, d), OPP[d])]
                    }
                }))
            }
            Lattice::List(l) => {
                let n = l.topology().node_of_cell(cell)?;
                let t = l.topology();
                if self.desc.propagation != Propagation::OsPull {
                    return Some(l.raw_pdfs(n));
                }
                Some(std::array::from_fn(|d| {
                    let slot = if d == 0 { t.slot(n, 0) } else { t.adj(n, d) };
                    l.raw_slot(slot)
                }))
            }
        }
    }

    /// Replaces the state: `state(cell)` gives the PDFs of every cell in
    /// the exchange convention.
    pub fn load_state(&mut self, state: impl Fn(usize) -> NodePdfs) -> Result<()> {
        self.require_standard()?;
        let pull = self.desc.propagation == Propagation::OsPull;
        match &mut self.lattice {
            Lattice::Full(l) => {
                let cells = l.dims().cells();
                if !pull {
                    for cell in 0..cells {
                        l.set_raw_pdfs(cell, &state(cell));
                    }
                    return Ok(());
                }
                // element (y, d) holds what y + c_d sends along d next step
                let ff = l.flags().clone();
                let all: Vec<NodePdfs> = (0..cells).map(&state).collect();
                for y in 0..cells {
                    let f: NodePdfs = std::array::from_fn(|d| {
                        let t = l.wrap_neighbor(y, d);
                        if ff.is_fluid_cell(t) {
                            all[t][d]
                        } else {
                            all[t][OPP[d]]
                        }
                    });
                    l.set_raw_pdfs(y, &f);
                }
            }
            Lattice::List(l) => {
                for n in 0..l.n_fluid() {
                    let f = state(l.topology().cells()[n]);
                    if pull {
                        let t = l.topology();
                        let slots: [usize; Q] =
                            std::array::from_fn(|d| if d == 0 { t.slot(n, 0) } else { t.adj(n, d) });
                        for d in 0..Q {
                            l.set_raw_slot(slots[d], f[d]);
                        }
                    } else {
                        l.set_raw_pdfs(n, &f);
                    }
                }
            }
        }
        Ok(())
    }

    /// Density and velocity of every fluid cell, in cell order.
    pub fn macroscopic_field(&self) -> Result<Vec<(usize, f64, [f64; 3])>> {
        self.require_standard()?;
        let ff = self.flags();
        let mut out = Vec::with_capacity(self.n_fluid());
        for cell in 0..ff.dims().cells() {
            if ff.is_fluid_cell(cell) {
                let f = self.pdfs_unchecked(cell).expect("fluid cells are stored");
                let (rho, u) = macroscopic(&f).map_err(|e| Error::Numerical {
                    step: self.state.steps,
                    msg: format!("cell {cell}: {e}"),
                })?;
                out.push((cell, rho, u));
            }
        }
        Ok(out)
    }

    /// Sum of all stored populations: fluid nodes for list lattices,
    /// fluid and solid nodes for full arrays.
    pub fn total_mass(&self) -> Result<f64> {
        self.require_standard()?;
        let cells = self.flags().dims().cells();
        Ok((0..cells).filter_map(|c| self.pdfs_unchecked(c)).map(|f| f.iter().sum::<f64>()).sum())
    }

    /// Total momentum of the fluid nodes.
    pub fn fluid_momentum(&self) -> Result<[f64; 3]> {
        self.require_standard()?;
        let ff = self.flags();
        let mut m = [0.0; 3];
        for cell in (0..ff.dims().cells()).filter(|&c| ff.is_fluid_cell(c)) {
            let f = self.pdfs_unchecked(cell).expect("fluid cells are stored");
            for (d, fd) in f.iter().enumerate() {
                for a in 0..3 {
                    m[a] += C[d][a] as f64 * fd;
                }
            }
        }
        Ok(m)
    }
}
