//! Loop balance, Roofline ceiling and the bandwidth micro-benchmarks.

mod microbench;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Addressing, KernelDescriptor, Propagation};
use crate::lattice::{RiaCoding, ADJ_PER_NODE, RIA_RUN_BYTES};

pub use microbench::{last_level_cache_bytes, microbench, run_microbench, BandwidthMeasurement, Microbench, MicrobenchConfig};

const PDF_BYTES: f64 = 8.0;
const INDEX_BYTES: f64 = 4.0;

/// Bytes per fluid node update, by origin. Range balances carry the
/// upper end in `ria_metadata_bytes`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub pdf_reads: f64,
    pub pdf_writes: f64,
    pub write_allocates: f64,
    pub adjacency_bytes: f64,
    pub ria_metadata_bytes: f64,
}

impl Breakdown {
    fn total(&self) -> f64 {
        PDF_BYTES * (self.pdf_reads + self.pdf_writes + self.write_allocates)
            + self.adjacency_bytes
            + self.ria_metadata_bytes
    }
}

/// Loop balance in B/FLUP; `lo == hi` for point values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopBalance {
    pub lo: f64,
    pub hi: f64,
    pub breakdown: Breakdown,
}

impl LoopBalance {
    fn point(b: Breakdown) -> Self {
        let v = b.total();
        LoopBalance { lo: v, hi: v, breakdown: b }
    }

    pub fn value(&self) -> Option<f64> {
        (self.lo == self.hi).then_some(self.lo)
    }

    pub fn is_range(&self) -> bool {
        self.lo != self.hi
    }
}

impl fmt::Display for LoopBalance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{v:.1}"),
            None => write!(f, "{:.0}-{:.0}", self.lo, self.hi),
        }
    }
}

/// Run count and fluid node count of a run-length coded lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub runs: usize,
    pub n_fluid: usize,
}

impl RunStats {
    pub fn of(ria: &RiaCoding) -> Self {
        RunStats { runs: ria.runs().len(), n_fluid: ria.n_fluid() }
    }

    pub fn ratio(&self) -> f64 {
        self.runs as f64 / self.n_fluid as f64
    }
}

/// Theoretical loop balance of a kernel. Run-coded kernels need `stats`
/// for a point value and return the full range otherwise.
pub fn loop_balance(k: &KernelDescriptor, stats: Option<RunStats>) -> LoopBalance {
    let q = 19.0;
    let adj = ADJ_PER_NODE as f64 * INDEX_BYTES;
    let mut b = Breakdown {
        pdf_reads: q,
        pdf_writes: q,
        write_allocates: 0.0,
        adjacency_bytes: 0.0,
        ria_metadata_bytes: 0.0,
    };
    match (k.propagation, k.addressing) {
        (Propagation::Aa, Addressing::Direct) => {}
        (Propagation::Aa, Addressing::Indirect) if k.ria => {
            // one run record per run, read once per even/odd pair
            let per_run = RIA_RUN_BYTES as f64 / 2.0;
            let base = b.total();
            return match stats {
                Some(s) => {
                    b.ria_metadata_bytes = (per_run * s.ratio()).clamp(0.0, per_run);
                    LoopBalance::point(b)
                }
                None => {
                    b.ria_metadata_bytes = per_run;
                    LoopBalance { lo: base, hi: base + per_run, breakdown: b }
                }
            };
        }
        // the adjacency is read in the odd step only
        (Propagation::Aa, Addressing::Indirect) => b.adjacency_bytes = adj / 2.0,
        (_, Addressing::Direct) => b.write_allocates = q,
        (_, Addressing::Indirect) => {
            b.adjacency_bytes = adj;
            if k.nt_streams == 0 {
                b.write_allocates = q;
            }
        }
    }
    LoopBalance::point(b)
}

/// Loop balance the kernel really has on this build: the split kernels
/// fall back to write-allocating stores without streaming stores.
pub fn effective_loop_balance(k: &KernelDescriptor, stats: Option<RunStats>, streaming: bool) -> LoopBalance {
    let mut bl = loop_balance(k, stats);
    if k.nt_streams > 0 && !streaming {
        bl.breakdown.write_allocates = 19.0;
        bl = LoopBalance::point(bl.breakdown);
    }
    bl
}

/// Micro-benchmark whose bandwidth bounds a kernel.
pub fn reference_microbench(k: &KernelDescriptor) -> Microbench {
    if k.nt_streams > 0 {
        Microbench::Copy19NtSl
    } else if k.is_aa() {
        Microbench::Update19
    } else {
        Microbench::Copy19
    }
}

/// Upper performance bound `P = B / B_l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RooflinePrediction {
    /// Bandwidth in GB/s.
    pub bandwidth: f64,
    pub loop_balance: LoopBalance,
    /// MFLUP/s at the upper end of the loop balance range.
    pub pmax_lo: f64,
    /// MFLUP/s at the lower end of the loop balance range.
    pub pmax_hi: f64,
}

impl RooflinePrediction {
    pub fn value(&self) -> Option<f64> {
        (self.pmax_lo == self.pmax_hi).then_some(self.pmax_hi)
    }
}

/// MFLUP/s ceiling for a bandwidth in GB/s.
pub fn roofline(bandwidth_gbs: f64, bl: &LoopBalance) -> Result<RooflinePrediction> {
    if !(bandwidth_gbs > 0.0 && bandwidth_gbs.is_finite()) {
        return Err(Error::Domain(format!("bandwidth must be positive, got {bandwidth_gbs}")));
    }
    if !(bl.lo > 0.0 && bl.hi >= bl.lo && bl.hi.is_finite()) {
        return Err(Error::Domain(format!("loop balance must be positive, got {}..{}", bl.lo, bl.hi)));
    }
    Ok(RooflinePrediction {
        bandwidth: bandwidth_gbs,
        loop_balance: *bl,
        pmax_lo: bandwidth_gbs * 1000.0 / bl.hi,
        pmax_hi: bandwidth_gbs * 1000.0 / bl.lo,
    })
}

/// Measured bandwidths in GB/s keyed by micro-benchmark name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSet {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host: Option<String>,
    pub bandwidths: BTreeMap<String, f64>,
}

impl BandwidthSet {
    pub fn get(&self, m: Microbench) -> Option<f64> {
        self.bandwidths.get(m.name()).copied()
    }

    pub fn insert(&mut self, m: Microbench, gbs: f64) {
        self.bandwidths.insert(m.name().to_string(), gbs);
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let set: BandwidthSet =
            toml::from_str(text).map_err(|e| Error::config(format!("bandwidth file: {e}")))?;
        for (k, v) in &set.bandwidths {
            k.parse::<Microbench>()?;
            if !(*v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("bandwidth '{k}' must be positive, got {v}")));
            }
        }
        Ok(set)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("bandwidth sets always serialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub kernel: String,
    pub loop_balance: LoopBalance,
    pub microbench: Microbench,
    /// `None` when the bandwidth of `microbench` is unavailable.
    pub prediction: Option<RooflinePrediction>,
}

impl ModelRow {
    pub fn available(&self) -> bool {
        self.prediction.is_some()
    }
}

/// One row per kernel: loop balance, bounding micro-benchmark and ceiling.
pub fn model_report(bw: &BandwidthSet, kernels: &[KernelDescriptor], stats: Option<RunStats>) -> Vec<ModelRow> {
    kernels
        .iter()
        .map(|k| {
            let bl = loop_balance(k, stats);
            let mb = reference_microbench(k);
            let prediction = bw.get(mb).and_then(|b| roofline(b, &bl).ok());
            ModelRow { kernel: k.name.clone(), loop_balance: bl, microbench: mb, prediction }
        })
        .collect()
}

/// Largest number of nodes one layer may hold so that `layers` layers of
/// `workers` workers fit into `cache_bytes`.
pub fn layer_condition_nodes(cache_bytes: f64, workers: usize, layers: usize, bytes_per_node: f64) -> f64 {
    cache_bytes / (workers as f64 * layers as f64 * bytes_per_node)
}

/// Bytes per node of a single-buffer list lattice: PDFs plus adjacency.
pub const AA_LIST_NODE_BYTES: f64 = 19.0 * PDF_BYTES + ADJ_PER_NODE as f64 * INDEX_BYTES;

#[cfg(test)]
mod tests {
    use super::*;

    fn k(name: &str) -> KernelDescriptor {
        KernelDescriptor::from_name(name).unwrap()
    }

    #[test]
    fn breakdown_sums() {
        let bl = loop_balance(&k("list-pull-soa"), None);
        assert_eq!(bl.breakdown.adjacency_bytes, 72.0);
        assert_eq!(bl.breakdown.write_allocates, 19.0);
        assert_eq!(bl.value(), Some(528.0));
    }

    #[test]
    fn ria_endpoints() {
        let ria = k("list-aa-ria-soa");
        let at = |runs| loop_balance(&ria, Some(RunStats { runs, n_fluid: 1000 })).value().unwrap();
        assert_eq!(at(0), 304.0);
        assert_eq!(at(1000), 342.0);
        let bl = loop_balance(&ria, None);
        assert_eq!((bl.lo, bl.hi), (304.0, 342.0));
        assert_eq!(bl.to_string(), "304-342");
    }

    #[test]
    fn fallback_without_streaming_stores() {
        let nt = k("list-pull-split-nt-2s-soa");
        assert_eq!(effective_loop_balance(&nt, None, true).value(), Some(376.0));
        assert_eq!(effective_loop_balance(&nt, None, false).value(), Some(528.0));
    }

    #[test]
    fn roofline_domain() {
        let bl = loop_balance(&k("aa-soa"), None);
        assert!(roofline(0.0, &bl).is_err());
        assert!(roofline(-1.0, &bl).is_err());
        assert!((roofline(51.1, &bl).unwrap().value().unwrap() - 168.09).abs() < 0.01);
    }

    #[test]
    fn bandwidth_file_round_trip() {
        let mut set = BandwidthSet { host: Some("test".into()), ..Default::default() };
        set.insert(Microbench::Copy19, 48.0);
        set.insert(Microbench::Update19, 51.1);
        let back = BandwidthSet::from_toml(&set.to_toml()).unwrap();
        assert_eq!(back, set);
        assert!(BandwidthSet::from_toml("[bandwidths]\nfoo = 1.0\n").is_err());
        assert!(BandwidthSet::from_toml("[bandwidths]\ncopy = -1.0\n").is_err());
    }

    #[test]
    fn layer_condition() {
        let n = layer_condition_nodes(25.0 * 1024.0 * 1024.0, 10, 4, AA_LIST_NODE_BYTES);
        assert_eq!(n.floor(), 2925.0);
        assert_eq!(n.sqrt().floor(), 54.0);
    }
}
