//! Reduced indirect addressing: run-length coding of the adjacency list.
//!
//! Consecutive nodes whose adjacency entries sit at the same offsets
//! relative to their own storage position form a run. Kernels resolve the
//! pattern once per run and address the remaining nodes directly.

use std::ops::Range;

use super::list::ListTopology;
use super::ADJ_PER_NODE;

/// Memory cost of one run: 4 B length plus 18 relative 4 B offsets.
pub const RIA_RUN_BYTES: usize = 4 + ADJ_PER_NODE * 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub start: u32,
    pub len: u32,
    /// Adjacency entry minus the node's base position, per direction 1..19.
    pub pattern: [i64; ADJ_PER_NODE],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RiaCoding {
    runs: Vec<Run>,
    n_fluid: usize,
}

impl RiaCoding {
    /// Maximal runs of consecutive nodes sharing one relative pattern.
    pub fn build_ria(topo: &ListTopology) -> Self {
        let n = topo.n_fluid();
        let pattern_of = |node: usize| -> [i64; ADJ_PER_NODE] {
            let base = topo.base(node) as i64;
            std::array::from_fn(|k| topo.adj(node, k + 1) as i64 - base)
        };
        let mut runs: Vec<Run> = Vec::new();
        for node in 0..n {
            let p = pattern_of(node);
            match runs.last_mut() {
                Some(r) if r.pattern == p => r.len += 1,
                _ => runs.push(Run { start: node as u32, len: 1, pattern: p }),
            }
        }
        RiaCoding { runs, n_fluid: n }
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn n_fluid(&self) -> usize {
        self.n_fluid
    }

    /// Bytes of run metadata.
    pub fn metadata_bytes(&self) -> usize {
        self.runs.len() * RIA_RUN_BYTES
    }

    /// Reconstructs the full adjacency list (18 entries per node) for a
    /// lattice with the given base stride (1 for SoA, 19 for AoS).
    pub fn expand(&self, base_stride: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.n_fluid * ADJ_PER_NODE);
        for r in &self.runs {
            for node in r.start as usize..(r.start + r.len) as usize {
                let base = (node * base_stride) as i64;
                out.extend(r.pattern.iter().map(|p| (base + p) as u32));
            }
        }
        out
    }

    /// Splits the runs into `workers` contiguous groups of roughly equal
    /// node counts. Returns run-index ranges.
    pub fn run_partitions(&self, workers: usize) -> Vec<Range<usize>> {
        let mut bounds = vec![0usize];
        for k in 1..workers {
            let target = (k * self.n_fluid / workers) as u32;
            let idx = self.runs.partition_point(|r| r.start < target);
            bounds.push(idx.max(*bounds.last().unwrap()));
        }
        bounds.push(self.runs.len());
        bounds.windows(2).map(|w| w[0]..w[1]).collect()
    }

    /// Node ranges belonging to [`run_partitions`](Self::run_partitions).
    pub fn node_partitions(&self, workers: usize) -> Vec<Range<usize>> {
        let start_of = |i: usize| self.runs.get(i).map_or(self.n_fluid, |r| r.start as usize);
        self.run_partitions(workers).into_iter().map(|r| start_of(r.start)..start_of(r.end)).collect()
    }
}

/// Fraction of fluid nodes covered by full `width`-wide chunks of runs.
pub fn vectorizable_fraction(ria: &RiaCoding, width: usize) -> f64 {
    assert!(width >= 1, "vector width must be at least 1");
    if ria.n_fluid == 0 {
        return 0.0;
    }
    let covered: usize = ria.runs.iter().map(|r| r.len as usize / width * width).sum();
    covered as f64 / ria.n_fluid as f64
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{build_geometry, GeometrySpec};
    use crate::lattice::{Layout, Orientation, PaddingPolicy};
    use crate::pool::WorkerPool;

    fn topo(spec: GeometrySpec, blk: usize, layout: Layout) -> ListTopology {
        let ff = Arc::new(build_geometry(&spec).unwrap());
        ListTopology::build(ff, layout, blk, &PaddingPolicy::Auto, Orientation::Scatter, &WorkerPool::single())
            .unwrap()
    }

    #[test]
    fn channel_lines_give_three_runs() {
        let t = topo(GeometrySpec::channel(6, 10, 12), 0, Layout::SoA);
        let ria = RiaCoding::build_ria(&t);
        // 10 fluid nodes per z line: 1 + 8 + 1
        assert_eq!(ria.runs().len(), 3 * 6 * 8);
        for chunk in ria.runs().chunks(3) {
            let lens: Vec<u32> = chunk.iter().map(|r| r.len).collect();
            assert_eq!(lens, vec![1, 8, 1]);
        }
        assert!((vectorizable_fraction(&ria, 4) - 0.8).abs() < 1e-15);
        assert_eq!(vectorizable_fraction(&ria, 1), 1.0);
    }

    #[test]
    fn isolated_nodes_have_unit_runs() {
        let t = topo(GeometrySpec::blocks(6, 6, 6, 1, 1), 0, Layout::SoA);
        let ria = RiaCoding::build_ria(&t);
        assert_eq!(ria.runs().len(), t.n_fluid());
        assert!(ria.runs().iter().all(|r| r.len == 1));
    }

    #[test]
    fn expansion_is_lossless() {
        for (spec, blk, layout) in [
            (GeometrySpec::channel(5, 7, 9), 0, Layout::SoA),
            (GeometrySpec::blocks(9, 8, 10, 3, 2), 3, Layout::SoA),
            (GeometrySpec::pipe(4, 11, 11), 2, Layout::AoS),
        ] {
            let t = topo(spec, blk, layout);
            let ria = RiaCoding::build_ria(&t);
            let stride = if layout == Layout::SoA { 1 } else { 19 };
            assert_eq!(ria.expand(stride), t.adjacency());
        }
    }

    #[test]
    fn partitions_respect_run_boundaries() {
        let t = topo(GeometrySpec::channel(8, 10, 10), 0, Layout::SoA);
        let ria = RiaCoding::build_ria(&t);
        for workers in 1..5 {
            let parts = ria.node_partitions(workers);
            assert_eq!(parts.len(), workers);
            assert_eq!(parts[0].start, 0);
            assert_eq!(parts.last().unwrap().end, t.n_fluid());
            for p in &parts {
                assert!(p.start == t.n_fluid() || ria.runs().iter().any(|r| r.start as usize == p.start));
            }
        }
    }
}
