//! Shared oracles for the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::sync::Arc;

use lbmbench::d3q19::{BodyForce, NodePdfs, TrtParams, C, OPP, Q, W};
use lbmbench::geometry::{FlagField, Neighbor};
use lbmbench::kernels::{KernelDescriptor, Solver};
use lbmbench::lattice::PaddingPolicy;
use lbmbench::pool::WorkerPool;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Wall treatment of a kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wall {
    /// Reflection inside the update (list kernels).
    HalfWay,
    /// Solid nodes stream like fluid and swap afterwards (full arrays).
    FullWay,
}

pub fn wall_of(k: &KernelDescriptor) -> Wall {
    if k.is_list() {
        Wall::HalfWay
    } else {
        Wall::FullWay
    }
}

/// Textbook TRT collision written from the moment decomposition, kept
/// separate from the library's unrolled version.
pub fn collide(f: &NodePdfs, p: &TrtParams, g: &BodyForce) -> NodePdfs {
    let rho: f64 = f.iter().sum();
    let mut u = [0.0; 3];
    for i in 0..Q {
        for a in 0..3 {
            u[a] += C[i][a] as f64 * f[i];
        }
    }
    for a in 0..3 {
        u[a] /= rho;
    }
    let usq = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    let mut out = [0.0; Q];
    for i in 0..Q {
        let o = OPP[i];
        let cu: f64 = (0..3).map(|a| C[i][a] as f64 * u[a]).sum();
        let cg: f64 = (0..3).map(|a| C[i][a] as f64 * g.g[a]).sum();
        let eq_plus = W[i] * rho * (1.0 + 4.5 * cu * cu - 1.5 * usq);
        let eq_minus = W[i] * rho * 3.0 * cu;
        let f_plus = 0.5 * (f[i] + f[o]);
        let f_minus = 0.5 * (f[i] - f[o]);
        out[i] = f[i] - p.omega_plus * (f_plus - eq_plus) - p.omega_minus * (f_minus - eq_minus)
            + 3.0 * W[i] * rho * cg;
    }
    out
}

/// Naive push stepper over a dense copy of the state.
pub struct Reference {
    pub ff: Arc<FlagField>,
    pub f: Vec<NodePdfs>,
    pub wall: Wall,
    pub p: TrtParams,
    pub g: BodyForce,
}

impl Reference {
    pub fn new(ff: Arc<FlagField>, wall: Wall, p: TrtParams, g: BodyForce, init: impl Fn(usize) -> NodePdfs) -> Self {
        let f = (0..ff.dims().cells()).map(init).collect();
        Reference { ff, f, wall, p, g }
    }

    fn wrap(&self, cell: usize, d: usize) -> usize {
        let dims = self.ff.dims();
        let [x, y, z] = dims.coord(cell);
        let n = dims.as_array();
        let w = |v: usize, c: i32, l: usize| (v as i64 + c as i64).rem_euclid(l as i64) as usize;
        dims.cell(w(x, C[d][0], n[0]), w(y, C[d][1], n[1]), w(z, C[d][2], n[2]))
    }

    pub fn step(&mut self) {
        let cells = self.ff.dims().cells();
        let mut next = self.f.clone();
        match self.wall {
            Wall::HalfWay => {
                for x in (0..cells).filter(|&c| self.ff.is_fluid_cell(c)) {
                    let q = collide(&self.f[x], &self.p, &self.g);
                    let coord = self.ff.dims().coord(x);
                    for d in 0..Q {
                        match self.ff.neighbor(coord, d) {
                            Neighbor::Node(t) => next[self.ff.dims().cell(t[0], t[1], t[2])][d] = q[d],
                            _ => next[x][OPP[d]] = q[d],
                        }
                    }
                }
            }
            Wall::FullWay => {
                for x in 0..cells {
                    let q = if self.ff.is_fluid_cell(x) { collide(&self.f[x], &self.p, &self.g) } else { self.f[x] };
                    for d in 0..Q {
                        next[self.wrap(x, d)][d] = q[d];
                    }
                }
                for s in (0..cells).filter(|&c| !self.ff.is_fluid_cell(c)) {
                    let old = next[s];
                    for d in 0..Q {
                        next[s][d] = old[OPP[d]];
                    }
                }
            }
        }
        self.f = next;
    }
}

/// Equilibrium weights with a reproducible relative perturbation.
pub fn random_state(cells: usize, seed: u64, amplitude: f64) -> Vec<NodePdfs> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..cells)
        .map(|_| std::array::from_fn(|d| W[d] * (1.0 + amplitude * (rng.gen::<f64>() - 0.5))))
        .collect()
}

/// Largest relative difference per PDF over the fluid cells.
pub fn max_rel_diff(ff: &FlagField, a: impl Fn(usize) -> NodePdfs, b: impl Fn(usize) -> NodePdfs) -> f64 {
    let mut worst: f64 = 0.0;
    for cell in (0..ff.dims().cells()).filter(|&c| ff.is_fluid_cell(c)) {
        let (fa, fb) = (a(cell), b(cell));
        for d in 0..Q {
            let scale = fa[d].abs().max(fb[d].abs()).max(1e-300);
            worst = worst.max((fa[d] - fb[d]).abs() / scale);
        }
    }
    worst
}

pub fn solver(
    k: KernelDescriptor,
    ff: &Arc<FlagField>,
    padding: &PaddingPolicy,
    p: TrtParams,
    g: BodyForce,
    workers: usize,
) -> Solver {
    let pool = Arc::new(WorkerPool::new(workers, None).unwrap());
    Solver::new(k, ff.clone(), padding, p, g, pool).unwrap()
}

/// Solver loaded with `state`, indexed by cell.
pub fn loaded(k: KernelDescriptor, ff: &Arc<FlagField>, state: &[NodePdfs], g: BodyForce, workers: usize) -> Solver {
    let mut s = solver(k, ff, &PaddingPolicy::Auto, TrtParams::default(), g, workers);
    s.load_state(|c| state[c]).unwrap();
    s
}

pub fn pdfs(s: &Solver, cell: usize) -> NodePdfs {
    s.pdfs_at(cell).unwrap().unwrap()
}

/// Every stored PDF of the lattice, in cell order, as raw bits.
pub fn bits(s: &Solver) -> Vec<u64> {
    let cells = s.flags().dims().cells();
    (0..cells).filter_map(|c| s.pdfs_at(c).unwrap()).flatten().map(f64::to_bits).collect()
}
