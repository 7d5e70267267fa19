//! Command-line front end and CSV/JSON run records.

use std::ffi::OsString;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_geometry, Dims, GeometryKind, GeometrySpec, GeometryStats};
use crate::harness::{run_benchmark, BenchConfig, BenchResult};
use crate::kernels::{KernelDescriptor, KERNEL_NAMES};
use crate::lattice::{Layout, ListTopology, Orientation, PaddingPolicy, RiaCoding};
use crate::perfmodel::{microbench, model_report, BandwidthSet, Microbench, ModelRow, RunStats};
use crate::pool::WorkerPool;
use crate::verification::{verify_kernel, PoiseuilleCase};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

/// CSV column order of [`RunRecord`].
pub const CSV_COLUMNS: [&str; 20] = [
    "schema_version",
    "timestamp",
    "kernel",
    "geometry",
    "nx",
    "ny",
    "nz",
    "blk",
    "padding_mode",
    "threads",
    "iterations",
    "n_fluid",
    "seconds",
    "mflups",
    "bl_theoretical",
    "pmax_mflups",
    "v_fraction",
    "nt_streams_effective",
    "affinity_applied",
    "host",
];

/// One benchmark run, flat. Empty `pmax_mflups` / `v_fraction` cells mean
/// no bandwidth was given or the kernel has no chunked loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub timestamp: String,
    pub kernel: String,
    pub geometry: String,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub blk: usize,
    pub padding_mode: String,
    pub threads: usize,
    pub iterations: u64,
    pub n_fluid: usize,
    pub seconds: f64,
    pub mflups: f64,
    pub bl_theoretical: f64,
    pub pmax_mflups: Option<f64>,
    pub v_fraction: Option<f64>,
    pub nt_streams_effective: usize,
    pub affinity_applied: bool,
    pub host: String,
}

impl RunRecord {
    pub fn from_result(r: &BenchResult, host: &str) -> Self {
        let c = &r.config;
        RunRecord {
            schema_version: SCHEMA_VERSION,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            kernel: c.kernel.name.clone(),
            geometry: c.geometry.kind.name().to_string(),
            nx: c.geometry.dims.nx,
            ny: c.geometry.dims.ny,
            nz: c.geometry.dims.nz,
            blk: c.kernel.blk,
            padding_mode: c.padding.to_string(),
            threads: r.workers,
            iterations: c.iterations,
            n_fluid: r.n_fluid,
            seconds: r.seconds,
            mflups: r.mflups,
            bl_theoretical: r.loop_balance.hi,
            pmax_mflups: r.pmax_mflups,
            v_fraction: r.v_fraction,
            nt_streams_effective: r.nt_streams_effective,
            affinity_applied: r.affinity_applied,
            host: host.to_string(),
        }
    }
}

/// Appends records to a CSV file, writing the header only into an empty
/// file and refusing files with a different header.
pub fn append_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let existing = std::fs::read_to_string(path).unwrap_or_default();
    let fresh = existing.trim().is_empty();
    if !fresh {
        let header = existing.lines().next().unwrap_or("");
        if header != CSV_COLUMNS.join(",") {
            return Err(Error::config(format!(
                "--out: {} has a different CSV header; use a new file such as results.csv",
                path.display()
            )));
        }
    }
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in records {
        w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    rd.deserialize()
        .map(|r| r.map_err(|e| Error::Io(std::io::Error::other(e))))
        .collect()
}

/// Free-text host description: host name and CPU model.
pub fn host_descriptor() -> String {
    let name = std::fs::read_to_string("/proc/sys/kernel/hostname").unwrap_or_default();
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|m| m.trim().to_string())
        })
        .unwrap_or_default();
    format!("{} {}", name.trim(), cpu).trim().to_string()
}

#[derive(Parser, Debug)]
#[command(name = "lbmbench", version, about = "D3Q19 TRT lattice Boltzmann benchmark kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the seventeen kernel names.
    ListKernels,
    /// Build a geometry and print its statistics as JSON.
    Geometry(GeometryArgs),
    /// Time one kernel.
    Bench(BenchArgs),
    /// Check a kernel against the Poiseuille parabola.
    Verify(VerifyArgs),
    /// Measure memory bandwidth.
    Microbench(MicrobenchArgs),
    /// Print loop balances and Roofline ceilings.
    Model(ModelArgs),
}

#[derive(Args, Debug)]
struct GeomOpts {
    /// channel, slit, pipe or blocks.
    #[arg(long = "geometry", alias = "kind", default_value = "channel")]
    kind: String,
    /// NXxNYxNZ.
    #[arg(long, default_value = "500x100x100")]
    dims: String,
    /// Obstacle edge (blocks).
    #[arg(long, default_value_t = 8)]
    block: usize,
    /// Obstacle spacing (blocks).
    #[arg(long, default_value_t = 8)]
    spacing: usize,
}

impl GeomOpts {
    fn spec(&self) -> Result<GeometrySpec> {
        let kind: GeometryKind = self.kind.parse()?;
        let dims = Dims::parse(&self.dims)?;
        let spec = GeometrySpec { kind, dims, block: self.block, spacing: self.spacing };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Debug)]
struct GeometryArgs {
    #[command(flatten)]
    geom: GeomOpts,
    /// Accepted for compatibility; statistics are always printed.
    #[arg(long)]
    stats: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    kernel: String,
    #[command(flatten)]
    geom: GeomOpts,
    #[arg(long, default_value_t = 100)]
    iterations: u64,
    #[arg(long, default_value_t = crate::harness::DEFAULT_WARMUP)]
    warmup: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    blk: usize,
    /// auto, none, thrash or 19 comma-separated pad counts.
    #[arg(long, default_value = "auto")]
    padding: String,
    /// Comma-separated core ids, one per worker.
    #[arg(long)]
    pin: Option<String>,
    /// Lane count of the chunked kernels.
    #[arg(long)]
    width: Option<usize>,
    /// Seed of a random initial perturbation.
    #[arg(long)]
    seed: Option<u64>,
    /// Bandwidth file used for the Roofline ceiling.
    #[arg(long)]
    bandwidths: Option<PathBuf>,
    /// Append to this file instead of printing.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    kernel: String,
    #[arg(long, default_value = "8x8x34")]
    dims: String,
    /// Acceleration along x.
    #[arg(long, default_value_t = 1e-6)]
    g: f64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Give up after this many steps.
    #[arg(long, default_value_t = 400_000)]
    max_steps: u64,
}

#[derive(Args, Debug)]
struct MicrobenchArgs {
    /// copy, copy-19, copy-19-nt-sl or update-19; all when omitted.
    #[arg(long)]
    which: Option<String>,
    /// Working set in bytes.
    #[arg(long, default_value_t = 1 << 30)]
    size: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Write the bandwidths to this file.
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long)]
    bandwidths: Option<PathBuf>,
    /// Geometry used for the run statistics of the run-coded kernels.
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long, default_value = "500x100x100")]
    dims: String,
    #[arg(long, default_value_t = 8)]
    block: usize,
    #[arg(long, default_value_t = 8)]
    spacing: usize,
    #[arg(long, default_value_t = 0)]
    blk: usize,
    #[arg(long)]
    json: bool,
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let mut out = std::io::stdout().lock();
    match dispatch(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical { .. } => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::ListKernels => {
            for n in KERNEL_NAMES {
                writeln!(out, "{n}")?;
            }
        }
        Command::Geometry(a) => {
            let spec = a.geom.spec()?;
            let ff = build_geometry(&spec)?;
            writeln!(out, "{}", to_json(&GeometryStats::of(&spec, &ff)))?;
        }
        Command::Bench(a) => bench(a, out)?,
        Command::Verify(a) => {
            let k = KernelDescriptor::from_name(&a.kernel)?;
            let case = PoiseuilleCase { dims: Dims::parse(&a.dims)?, g: a.g, max_steps: a.max_steps, ..Default::default() };
            let pool = Arc::new(WorkerPool::new(a.threads, None)?);
            let r = verify_kernel(&k, &case, pool)?;
            writeln!(out, "{}", to_json(&r))?;
            if !r.passed {
                return Ok(EXIT_VERIFICATION);
            }
        }
        Command::Microbench(a) => {
            let which = match &a.which {
                Some(w) => vec![w.parse::<Microbench>().map_err(|_| {
                    Error::config(format!("--which: unknown micro-benchmark `{w}`, e.g. --which update-19"))
                })?],
                None => Microbench::ALL.to_vec(),
            };
            let pool = WorkerPool::new(a.threads, None)?;
            let mut set = BandwidthSet { host: Some(host_descriptor()), ..Default::default() };
            for m in which {
                let r = microbench(m, a.size, &pool)?;
                set.insert(m, r.gbs);
                writeln!(out, "{}", to_json(&r))?;
            }
            if let Some(p) = a.save {
                set.save(&p)?;
            }
        }
        Command::Model(a) => model(a, out)?,
    }
    Ok(EXIT_OK)
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<()> {
    let mut kernel = KernelDescriptor::from_name(&a.kernel)?.with_blk(a.blk);
    if let Some(w) = a.width {
        kernel = kernel.with_vector_width(w);
    }
    let mut cfg = BenchConfig::new(kernel, a.geom.spec()?, a.iterations, a.threads);
    cfg.warmup = a.warmup;
    cfg.padding = a.padding.parse()?;
    cfg.seed = a.seed;
    cfg.pin = a.pin.as_deref().map(parse_pin).transpose()?;
    let bw = a.bandwidths.as_deref().map(BandwidthSet::load).transpose()?;
    let r = run_benchmark(&cfg, bw.as_ref())?;
    let rec = RunRecord::from_result(&r, &host_descriptor());
    match (a.out, a.format) {
        (Some(p), Format::Csv) => append_csv(&p, &[rec])?,
        (Some(p), Format::Json) => {
            let mut f = OpenOptions::new().create(true).append(true).open(p)?;
            writeln!(f, "{}", serde_json::to_string(&rec).expect("records serialize"))?;
        }
        (None, Format::Csv) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.serialize(&rec).map_err(|e| Error::Io(std::io::Error::other(e)))?;
            let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
            out.write_all(&bytes)?;
        }
        (None, Format::Json) => writeln!(out, "{}", to_json(&rec))?,
    }
    Ok(())
}

fn model(a: ModelArgs, out: &mut dyn Write) -> Result<()> {
    let bw = a.bandwidths.as_deref().map(BandwidthSet::load).transpose()?.unwrap_or_default();
    let stats = match &a.geometry {
        Some(kind) => {
            let opts = GeomOpts { kind: kind.clone(), dims: a.dims.clone(), block: a.block, spacing: a.spacing };
            Some(run_stats(&opts.spec()?, a.blk)?)
        }
        None => None,
    };
    let rows = model_report(&bw, &KernelDescriptor::all(), stats);
    if a.json {
        writeln!(out, "{}", to_json(&rows))?;
    } else {
        write_model_table(out, &rows)?;
    }
    Ok(())
}

/// Run statistics of the run-length coding of `spec` at blocking factor `blk`.
pub fn run_stats(spec: &GeometrySpec, blk: usize) -> Result<RunStats> {
    let ff = Arc::new(build_geometry(spec)?);
    let pool = WorkerPool::single();
    let topo = ListTopology::build(ff, Layout::SoA, blk, &PaddingPolicy::None, Orientation::Scatter, &pool)?;
    Ok(RunStats::of(&RiaCoding::build_ria(&topo)))
}

pub fn write_model_table(out: &mut dyn Write, rows: &[ModelRow]) -> Result<()> {
    writeln!(out, "{:<28} {:>9} {:<14} {:>10}", "kernel", "B_l", "micro-bench", "P_max")?;
    for r in rows {
        let p = match &r.prediction {
            Some(p) => match p.value() {
                Some(v) => format!("{v:.1}"),
                None => format!("{:.1}-{:.1}", p.pmax_lo, p.pmax_hi),
            },
            None => "n/a".to_string(),
        };
        writeln!(out, "{:<28} {:>9} {:<14} {:>10}", r.kernel, r.loop_balance.to_string(), r.microbench.name(), p)?;
    }
    Ok(())
}

fn parse_pin(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|c| {
            c.trim()
                .parse()
                .map_err(|_| Error::config(format!("--pin: expected comma-separated core ids such as 0,1,2,3; got `{s}`")))
        })
        .collect()
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pin_parsing() {
        assert_eq!(parse_pin("0, 2,4").unwrap(), vec![0, 2, 4]);
        assert!(parse_pin("0,a").is_err());
    }

    #[test]
    fn parse_errors_exit_one() {
        assert_eq!(run(["lbmbench", "bench"]), EXIT_CONFIG);
        assert_eq!(run(["lbmbench", "nope"]), EXIT_CONFIG);
        assert_eq!(run(["lbmbench", "bench", "--kernel", "foo", "--dims", "8x8x8"]), EXIT_CONFIG);
    }
}
