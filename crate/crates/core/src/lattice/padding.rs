//! Start offsets of the per-direction arrays of SoA list storage.
//!
//! The distance between two PDFs of one node equals the number of fluid
//! nodes. Unlucky counts map all 19 (or 38) concurrently used cache lines
//! onto a handful of cache or TLB sets. Padding inserts unused slots
//! between the direction arrays so that their starts spread over the sets
//! of a simple cache model.

use serde::{Deserialize, Serialize};

use crate::d3q19::Q;
use crate::error::{Error, Result};

const ELEM: usize = std::mem::size_of::<f64>();

/// Set-associative model used by [`padding_offsets`]: 64 B lines with 512
/// sets and a 4-set TLB for 2 MiB pages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheModel {
    pub line_bytes: usize,
    pub cache_sets: usize,
    pub page_bytes: usize,
    pub tlb_sets: usize,
}

impl Default for CacheModel {
    fn default() -> Self {
        CacheModel { line_bytes: 64, cache_sets: 512, page_bytes: 2 << 20, tlb_sets: 4 }
    }
}

impl CacheModel {
    fn slots_per_line(&self) -> usize {
        self.line_bytes / ELEM
    }

    fn lines_per_page(&self) -> usize {
        self.page_bytes / self.line_bytes
    }

    /// Cache set of the line holding element `offset`.
    pub fn cache_set(&self, offset: usize) -> usize {
        (offset / self.slots_per_line()) % self.cache_sets
    }

    /// TLB set of the page holding element `offset`.
    pub fn tlb_set(&self, offset: usize) -> usize {
        (offset * ELEM / self.page_bytes) % self.tlb_sets
    }

    /// Smallest offset `>= lo` whose line falls into cache set `set` and
    /// whose page falls into TLB set `tlb`.
    fn next_matching(&self, lo: usize, set: usize, tlb: usize) -> usize {
        let sets = self.cache_sets;
        let lpp = self.lines_per_page();
        let line0 = lo / self.slots_per_line();
        let mut line = line0 + (set + sets - line0 % sets) % sets;
        let page = line / lpp;
        if page % self.tlb_sets != tlb {
            let p = page + (tlb + self.tlb_sets - page % self.tlb_sets) % self.tlb_sets;
            // lines_per_page is a multiple of the set count, so the first
            // line of page `p` sits in set 0
            line = p * lpp + set;
        }
        if line == line0 {
            lo
        } else {
            line * self.slots_per_line()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum PaddingPolicy {
    /// Spread direction starts over distinct cache and TLB sets.
    #[default]
    Auto,
    None,
    /// Map every direction start to one cache set and one TLB set.
    Thrash,
    /// Pad slots inserted before each of the 19 direction arrays.
    Explicit(Vec<usize>),
}

impl PaddingPolicy {
    pub fn mode_name(&self) -> &'static str {
        match self {
            PaddingPolicy::Auto => "auto",
            PaddingPolicy::None => "none",
            PaddingPolicy::Thrash => "thrash",
            PaddingPolicy::Explicit(_) => "explicit",
        }
    }
}

impl std::fmt::Display for PaddingPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PaddingPolicy::Explicit(v) => {
                let s: Vec<String> = v.iter().map(|o| o.to_string()).collect();
                f.write_str(&s.join(","))
            }
            other => f.write_str(other.mode_name()),
        }
    }
}

impl std::str::FromStr for PaddingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(PaddingPolicy::Auto),
            "none" => Ok(PaddingPolicy::None),
            "thrash" => Ok(PaddingPolicy::Thrash),
            list => {
                let bad = || {
                    Error::config(format!(
                        "--padding: expected auto, none, thrash or 19 comma-separated pad counts such as 0,8,8,...,8; got `{list}`"
                    ))
                };
                let pads = list
                    .split(',')
                    .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                if pads.len() != Q {
                    return Err(bad());
                }
                Ok(PaddingPolicy::Explicit(pads))
            }
        }
    }
}

/// Start offset (in elements) of each direction array for `n_fluid` nodes.
pub fn padding_offsets(n_fluid: usize, policy: &PaddingPolicy) -> Result<[usize; Q]> {
    padding_offsets_with(n_fluid, policy, &CacheModel::default())
}

pub fn padding_offsets_with(
    n_fluid: usize,
    policy: &PaddingPolicy,
    model: &CacheModel,
) -> Result<[usize; Q]> {
    let mut off = [0usize; Q];
    match policy {
        PaddingPolicy::None => {
            for (d, o) in off.iter_mut().enumerate() {
                *o = d * n_fluid;
            }
        }
        PaddingPolicy::Explicit(pads) => {
            if pads.len() != Q {
                return Err(Error::config(format!(
                    "--padding: need {Q} pad counts, got {}",
                    pads.len()
                )));
            }
            let mut next = 0;
            for d in 0..Q {
                off[d] = next + pads[d];
                next = off[d] + n_fluid;
            }
        }
        PaddingPolicy::Auto => {
            let stride = model.cache_sets / Q;
            for d in 1..Q {
                let lo = off[d - 1] + n_fluid;
                off[d] = model.next_matching(lo, (d * stride) % model.cache_sets, d % model.tlb_sets);
            }
        }
        PaddingPolicy::Thrash => {
            let set = model.cache_set(0);
            let tlb = model.tlb_set(0);
            for d in 1..Q {
                let lo = off[d - 1] + n_fluid;
                off[d] = model.next_matching(lo, set, tlb);
            }
        }
    }
    Ok(off)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(off: &[usize; Q]) -> (Vec<usize>, Vec<usize>) {
        let m = CacheModel::default();
        (off.iter().map(|&o| m.cache_set(o)).collect(), off.iter().map(|&o| m.tlb_set(o)).collect())
    }

    #[test]
    fn none_is_contiguous() {
        let off = padding_offsets(1000, &PaddingPolicy::None).unwrap();
        for d in 0..Q {
            assert_eq!(off[d], d * 1000);
        }
    }

    #[test]
    fn auto_spreads_sets() {
        for n in [1, 64, 1000, 4096, 4_802_000] {
            let off = padding_offsets(n, &PaddingPolicy::Auto).unwrap();
            let (cs, ts) = sets(&off);
            let mut uniq = cs.clone();
            uniq.sort_unstable();
            uniq.dedup();
            assert_eq!(uniq.len(), Q, "n={n}");
            for d in 0..Q {
                assert_eq!(cs[d], d * 26);
                assert_eq!(ts[d], d % 4);
                if d > 0 {
                    assert!(off[d] >= off[d - 1] + n);
                }
            }
        }
    }

    #[test]
    fn auto_pad_is_minimal() {
        // brute force: no smaller start satisfies both set constraints
        let m = CacheModel::default();
        let n = 300_000;
        let off = padding_offsets(n, &PaddingPolicy::Auto).unwrap();
        for d in 1..4 {
            let lo = off[d - 1] + n;
            let first = (lo..=off[d])
                .find(|&s| m.cache_set(s) == d * 26 && m.tlb_set(s) == d % 4)
                .unwrap();
            assert_eq!(first, off[d]);
        }
    }

    #[test]
    fn thrash_collapses_sets() {
        for n in [10, 4096, 123_457] {
            let off = padding_offsets(n, &PaddingPolicy::Thrash).unwrap();
            let (cs, ts) = sets(&off);
            assert!(cs.iter().all(|&s| s == cs[0]));
            assert!(ts.iter().all(|&s| s == ts[0]));
        }
    }

    #[test]
    fn explicit_and_parse() {
        let p: PaddingPolicy = "0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18".parse().unwrap();
        let off = padding_offsets(10, &p).unwrap();
        assert_eq!(off[0], 0);
        assert_eq!(off[1], 10 + 1);
        assert_eq!(off[2], off[1] + 10 + 2);
        assert!("1,2".parse::<PaddingPolicy>().is_err());
        assert_eq!("thrash".parse::<PaddingPolicy>().unwrap(), PaddingPolicy::Thrash);
        assert_eq!(p.to_string().split(',').count(), Q);
    }
}
