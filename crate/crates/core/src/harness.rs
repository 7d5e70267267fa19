//! Benchmark execution: lattice setup, warm-up, timing and result records.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::d3q19::{equilibrium, BodyForce, TrtParams, W};
use crate::error::{Error, Result};
use crate::geometry::{build_geometry, GeometrySpec};
use crate::kernels::{KernelDescriptor, Lattice, Solver};
use crate::lattice::{vectorizable_fraction, PaddingPolicy};
use crate::perfmodel::{effective_loop_balance, reference_microbench, roofline, BandwidthSet, LoopBalance, RunStats};
use crate::pool::{Binding, WorkerPool};

pub use crate::pool::set_affinity;

pub const DEFAULT_WARMUP: u64 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub kernel: KernelDescriptor,
    pub geometry: GeometrySpec,
    pub iterations: u64,
    pub warmup: u64,
    pub workers: usize,
    pub pin: Option<Vec<usize>>,
    pub padding: PaddingPolicy,
    /// Seed of a random perturbation of the initial state; rest state if unset.
    pub seed: Option<u64>,
    pub params: TrtParams,
    pub force: BodyForce,
}

impl BenchConfig {
    pub fn new(kernel: KernelDescriptor, geometry: GeometrySpec, iterations: u64, workers: usize) -> Self {
        BenchConfig {
            kernel,
            geometry,
            iterations,
            warmup: DEFAULT_WARMUP,
            workers,
            pin: None,
            padding: PaddingPolicy::Auto,
            seed: None,
            params: TrtParams::default(),
            force: BodyForce::ZERO,
        }
    }

    pub fn blk(&self) -> usize {
        self.kernel.blk
    }

    /// Checks everything that can be checked without allocating the lattice.
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.geometry.validate()?;
        if self.iterations == 0 {
            return Err(Error::config("--iterations must be >= 1, e.g. --iterations 100"));
        }
        if self.kernel.is_aa() && (self.iterations % 2 != 0 || self.warmup % 2 != 0) {
            return Err(Error::config(format!(
                "--iterations/--warmup: AA kernels need even counts, e.g. --iterations {}",
                self.iterations + self.iterations % 2
            )));
        }
        if self.workers == 0 {
            return Err(Error::config("--threads must be >= 1, e.g. --threads 4"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub config: BenchConfig,
    pub n_fluid: usize,
    pub seconds: f64,
    pub mflups: f64,
    pub loop_balance: LoopBalance,
    /// Micro-benchmark bounding the kernel and the ceiling derived from it.
    pub microbench: String,
    pub pmax_mflups: Option<f64>,
    /// Fraction of odd-step node updates done in full lane chunks.
    pub v_fraction: Option<f64>,
    pub streaming_stores: bool,
    pub nt_streams_effective: usize,
    pub huge_pages: bool,
    pub affinity_applied: bool,
    pub bindings: Vec<Binding>,
    pub workers: usize,
}

impl BenchResult {
    /// Measured performance over the ceiling.
    pub fn roofline_fraction(&self) -> Option<f64> {
        self.pmax_mflups.map(|p| self.mflups / p)
    }
}

/// Million fluid node updates per second.
pub fn mflups(n_fluid: usize, iterations: u64, seconds: f64) -> f64 {
    n_fluid as f64 * iterations as f64 / seconds / 1e6
}

/// Builds, warms up and times a kernel.
pub fn run_benchmark(cfg: &BenchConfig, bandwidths: Option<&BandwidthSet>) -> Result<BenchResult> {
    run_benchmark_keep(cfg, bandwidths).map(|(r, _)| r)
}

/// Like [`run_benchmark`], also returning the solver in its final state.
pub fn run_benchmark_keep(cfg: &BenchConfig, bandwidths: Option<&BandwidthSet>) -> Result<(BenchResult, Solver)> {
    cfg.validate()?;
    let pool = Arc::new(WorkerPool::new(cfg.workers, cfg.pin.as_deref())?);
    let flags = Arc::new(build_geometry(&cfg.geometry)?);
    let mut solver = Solver::new(cfg.kernel.clone(), flags, &cfg.padding, cfg.params, cfg.force, pool.clone())?;
    if let Some(seed) = cfg.seed {
        perturb(&mut solver, seed)?;
    }
    solver.advance(cfg.warmup)?;
    let t0 = Instant::now();
    solver.advance(cfg.iterations)?;
    let seconds = t0.elapsed().as_secs_f64();

    let run_stats = match solver.lattice() {
        Lattice::List(l) => l.ria().map(RunStats::of),
        Lattice::Full(_) => None,
    };
    let streaming = solver.streaming_stores();
    let bl = effective_loop_balance(&cfg.kernel, run_stats, streaming);
    let mb = reference_microbench(&cfg.kernel);
    let pmax = bandwidths.and_then(|b| b.get(mb)).map(|b| roofline(b, &bl)).transpose()?.map(|p| p.pmax_lo);
    let v_fraction = match solver.lattice() {
        Lattice::List(l) if cfg.kernel.pv => l.ria().map(|r| vectorizable_fraction(r, cfg.kernel.vector_width)),
        _ if cfg.kernel.is_chunked() => Some(solver.odd_stats().fraction()),
        _ => None,
    };
    let result = BenchResult {
        config: cfg.clone(),
        n_fluid: solver.n_fluid(),
        seconds,
        mflups: mflups(solver.n_fluid(), cfg.iterations, seconds),
        loop_balance: bl,
        microbench: mb.name().to_string(),
        pmax_mflups: pmax,
        v_fraction,
        streaming_stores: streaming,
        nt_streams_effective: if streaming { cfg.kernel.nt_streams } else { 0 },
        huge_pages: solver.huge_pages(),
        affinity_applied: pool.all_pinned(),
        bindings: pool.bindings().to_vec(),
        workers: pool.workers(),
    };
    Ok((result, solver))
}

/// Replaces the rest state by equilibria with small random density and
/// velocity deviations, drawn in cell order.
pub fn perturb(solver: &mut Solver, seed: u64) -> Result<()> {
    let ff = solver.flags().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(ff.dims().cells());
    for cell in 0..ff.dims().cells() {
        let rho = 1.0 + 1e-3 * (rng.gen::<f64>() - 0.5);
        let u: [f64; 3] = std::array::from_fn(|_| 1e-3 * (rng.gen::<f64>() - 0.5));
        states.push(if ff.is_fluid_cell(cell) { equilibrium(rho, u)? } else { W });
    }
    solver.load_state(|c| states[c])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub steps: u64,
    pub converged: bool,
    /// Last relative change of the velocity field between checks.
    pub change: f64,
}

/// Advances in `check_interval` chunks until the largest velocity change
/// between checks, relative to the largest speed, drops below `rel_tol`.
pub fn steady_state_run(solver: &mut Solver, check_interval: u64, rel_tol: f64, max_steps: u64) -> Result<SteadyState> {
    if !(rel_tol > 0.0) {
        return Err(Error::Domain(format!("rel_tol must be positive, got {rel_tol}")));
    }
    if check_interval == 0 {
        return Err(Error::config("check interval must be >= 1"));
    }
    solver.check_steps(check_interval)?;
    let mut prev = velocities(solver)?;
    let mut steps = 0;
    let mut change = f64::INFINITY;
    while steps < max_steps {
        solver.advance(check_interval)?;
        steps += check_interval;
        let u = velocities(solver)?;
        let scale = u.iter().map(|v| v.iter().map(|c| c.abs()).fold(0.0, f64::max)).fold(0.0, f64::max);
        let diff = u
            .iter()
            .zip(&prev)
            .map(|(a, b)| (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        change = if scale > 0.0 { diff / scale } else { diff };
        prev = u;
        if change < rel_tol || (scale == 0.0 && diff == 0.0) {
            return Ok(SteadyState { steps, converged: true, change });
        }
    }
    Ok(SteadyState { steps, converged: false, change })
}

fn velocities(solver: &Solver) -> Result<Vec<[f64; 3]>> {
    let step = solver.state().steps;
    let field = solver.macroscopic_field().map_err(|e| match e {
        Error::Numerical { .. } => e,
        other => Error::Numerical { step, msg: other.to_string() },
    })?;
    let mut out = Vec::with_capacity(field.len());
    for (cell, _, u) in field {
        if u.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numerical { step, msg: format!("non-finite velocity at cell {cell}") });
        }
        out.push(u);
    }
    Ok(out)
}
