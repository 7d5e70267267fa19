use std::sync::Arc;

use lbmbench::geometry::{build_geometry, Dims, GeometrySpec};
use lbmbench::kernels::{KernelDescriptor, KERNEL_NAMES};
use lbmbench::lattice::{vectorizable_fraction, Layout, ListTopology, Orientation, PaddingPolicy, RiaCoding};
use lbmbench::perfmodel::{loop_balance, model_report, reference_microbench, roofline, BandwidthSet, Microbench, RunStats};
use lbmbench::pool::WorkerPool;
use proptest::prelude::*;

const TABLE: [(&str, f64, f64, Microbench); 17] = [
    ("blk-push-aos", 456.0, 456.0, Microbench::Copy19),
    ("blk-push-soa", 456.0, 456.0, Microbench::Copy19),
    ("blk-pull-aos", 456.0, 456.0, Microbench::Copy19),
    ("blk-pull-soa", 456.0, 456.0, Microbench::Copy19),
    ("aa-aos", 304.0, 304.0, Microbench::Update19),
    ("aa-soa", 304.0, 304.0, Microbench::Update19),
    ("aa-vec-soa", 304.0, 304.0, Microbench::Update19),
    ("list-push-aos", 528.0, 528.0, Microbench::Copy19),
    ("list-push-soa", 528.0, 528.0, Microbench::Copy19),
    ("list-pull-aos", 528.0, 528.0, Microbench::Copy19),
    ("list-pull-soa", 528.0, 528.0, Microbench::Copy19),
    ("list-pull-split-nt-1s-soa", 376.0, 376.0, Microbench::Copy19NtSl),
    ("list-pull-split-nt-2s-soa", 376.0, 376.0, Microbench::Copy19NtSl),
    ("list-aa-aos", 340.0, 340.0, Microbench::Update19),
    ("list-aa-soa", 340.0, 340.0, Microbench::Update19),
    ("list-aa-ria-soa", 304.0, 342.0, Microbench::Update19),
    ("list-aa-pv-soa", 304.0, 342.0, Microbench::Update19),
];

fn bdw() -> BandwidthSet {
    let mut bw = BandwidthSet::default();
    bw.insert(Microbench::Copy, 53.9);
    bw.insert(Microbench::Copy19, 48.0);
    bw.insert(Microbench::Copy19NtSl, 48.2);
    bw.insert(Microbench::Update19, 51.1);
    bw
}

fn topology(spec: GeometrySpec, blk: usize) -> ListTopology {
    let ff = Arc::new(build_geometry(&spec).unwrap());
    ListTopology::build(ff, Layout::SoA, blk, &PaddingPolicy::None, Orientation::Scatter, &WorkerPool::single()).unwrap()
}

#[test]
fn loop_balance_table() {
    assert_eq!(KERNEL_NAMES.len(), TABLE.len());
    for ((name, lo, hi, mb), legend) in TABLE.iter().zip(KERNEL_NAMES) {
        assert_eq!(*name, legend);
        let k = KernelDescriptor::from_name(name).unwrap();
        let bl = loop_balance(&k, None);
        assert_eq!((bl.lo, bl.hi), (*lo, *hi), "{name}");
        assert_eq!(reference_microbench(&k), *mb, "{name}");
    }
}

#[test]
fn roofline_reference_values() {
    let rows = model_report(&bdw(), &KernelDescriptor::all(), Some(RunStats { runs: 3, n_fluid: 98 }));
    let p = |name: &str| rows.iter().find(|r| r.kernel == name).unwrap().prediction.unwrap().value().unwrap();
    assert_eq!(format!("{:.1}", p("list-pull-soa")), "90.9");
    assert_eq!(format!("{:.1}", p("aa-soa")), "168.1");
    assert!((p("list-aa-pv-soa") - 167.4).abs() < 0.1);
    let point = roofline(51.1, &loop_balance(&KernelDescriptor::from_name("list-aa-ria-soa").unwrap(), None)).unwrap();
    assert!(point.pmax_lo < point.pmax_hi);
}

#[test]
fn missing_bandwidth_marks_rows_unavailable() {
    let mut bw = BandwidthSet::default();
    bw.insert(Microbench::Update19, 10.0);
    let rows = model_report(&bw, &KernelDescriptor::all(), None);
    for r in rows {
        assert_eq!(r.available(), r.microbench == Microbench::Update19, "{}", r.kernel);
    }
}

#[test]
fn report_serialization_is_stable() {
    let a = serde_json::to_string(&model_report(&bdw(), &KernelDescriptor::all(), None)).unwrap();
    let b = serde_json::to_string(&model_report(&bdw(), &KernelDescriptor::all(), None)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn channel_runs_per_line() {
    // every z-line of 6 fluid nodes: wall node, interior run, wall node
    let topo = topology(GeometrySpec::channel(20, 10, 8), 0);
    let ria = RiaCoding::build_ria(&topo);
    let lines = 20 * 8;
    assert_eq!(ria.runs().len(), 3 * lines);
    let stats = RunStats::of(&ria);
    assert!((stats.ratio() - 3.0 / 6.0).abs() < 1e-15);
    assert!((vectorizable_fraction(&ria, 4) - 4.0 / 6.0).abs() < 1e-15);
    assert!((vectorizable_fraction(&ria, 3) - 3.0 / 6.0).abs() < 1e-15);
    assert_eq!(vectorizable_fraction(&ria, 8), 0.0);
    assert_eq!(ria.expand(1), topo.adjacency());
}

#[test]
fn blocking_two_kills_vectorization() {
    let topo = topology(GeometrySpec::channel(10, 22, 22), 2);
    let ria = RiaCoding::build_ria(&topo);
    assert!(ria.runs().iter().all(|r| r.len <= 2));
    assert_eq!(vectorizable_fraction(&ria, 4), 0.0);
}

#[test]
fn isolated_nodes_give_one_run_each() {
    let topo = topology(GeometrySpec::blocks(8, 8, 8, 1, 1), 0);
    let ria = RiaCoding::build_ria(&topo);
    assert_eq!(ria.runs().len(), topo.n_fluid());
    let bl = loop_balance(&KernelDescriptor::from_name("list-aa-ria-soa").unwrap(), Some(RunStats::of(&ria)));
    assert_eq!(bl.value(), Some(342.0));
}

proptest! {
    #[test]
    fn roofline_monotone(b in 1.0f64..200.0, db in 0.1f64..10.0, bl in 100.0f64..600.0, dbl in 1.0f64..50.0) {
        let k = |v: f64| lbmbench::perfmodel::LoopBalance { lo: v, hi: v, ..loop_balance(&KernelDescriptor::from_name("aa-soa").unwrap(), None) };
        let p = |b: f64, v: f64| roofline(b, &k(v)).unwrap().value().unwrap();
        prop_assert!(p(b + db, bl) > p(b, bl));
        prop_assert!(p(b, bl + dbl) < p(b, bl));
    }

    #[test]
    fn ria_balance_within_endpoints(runs in 0usize..1000, extra in 1usize..1000) {
        let k = KernelDescriptor::from_name("list-aa-pv-soa").unwrap();
        let bl = loop_balance(&k, Some(RunStats { runs, n_fluid: runs + extra })).value().unwrap();
        prop_assert!((304.0..=342.0).contains(&bl));
    }

    #[test]
    fn vectorizability_non_increasing_in_width(nx in 2usize..8, ny in 3usize..10, nz in 3usize..14, blk in 0usize..5) {
        let ria = RiaCoding::build_ria(&topology(GeometrySpec::channel(nx, ny, nz), blk));
        let v: Vec<f64> = [1, 2, 4, 8, 16].iter().map(|&w| vectorizable_fraction(&ria, w)).collect();
        prop_assert_eq!(v[0], 1.0);
        prop_assert!(v.windows(2).all(|p| p[1] <= p[0]));
    }

    #[test]
    fn ria_lossless(nx in 2usize..7, ny in 3usize..9, nz in 3usize..9, blk in 0usize..4, kind in 0usize..3) {
        let spec = match kind {
            0 => GeometrySpec::channel(nx, ny, nz),
            1 => GeometrySpec::pipe(nx, ny.max(4), nz.max(4)),
            _ => GeometrySpec::blocks(6, 6, 6, 2, 1),
        };
        let topo = topology(spec, blk);
        prop_assert_eq!(RiaCoding::build_ria(&topo).expand(1), topo.adjacency().to_vec());
    }

    #[test]
    fn dims_text_round_trip(nx in 1usize..1000, ny in 1usize..1000, nz in 1usize..1000) {
        let d = Dims::new(nx, ny, nz);
        prop_assert_eq!(Dims::parse(&d.to_string()).unwrap(), d);
    }
}
