//! Lattice representations: dense full arrays and fluid-only lists.

mod full;
mod list;
pub mod padding;
mod ria;

use serde::{Deserialize, Serialize};

pub use full::{FullLattice, FullPartition};
pub use list::{order_nodes, ListLattice, ListTopology};
pub use padding::{padding_offsets, CacheModel, PaddingPolicy};
pub use ria::{vectorizable_fraction, Run, RiaCoding, RIA_RUN_BYTES};

/// Order in which the PDFs of the nodes are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// All 19 PDFs of a node are contiguous.
    AoS,
    /// All PDFs of one direction are contiguous.
    SoA,
}

impl Layout {
    pub fn name(self) -> &'static str {
        match self {
            Layout::AoS => "aos",
            Layout::SoA => "soa",
        }
    }
}

/// Which side of a link an adjacency entry describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    /// Entry `(n, d)`: slot holding direction `d` of the upstream neighbor
    /// `n - c[d]`, or the own slot `opp(d)` when that neighbor is solid.
    Gather,
    /// Entry `(n, d)`: slot `d` of the downstream neighbor `n + c[d]`, or
    /// the own slot `opp(d)` when that neighbor is solid.
    Scatter,
}

/// Entries per node in the adjacency list (the rest direction needs none).
pub const ADJ_PER_NODE: usize = 18;
