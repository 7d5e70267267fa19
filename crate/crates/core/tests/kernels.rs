mod common;

use std::sync::Arc;

use common::*;
use lbmbench::d3q19::{BodyForce, TrtParams, W};
use lbmbench::geometry::{build_geometry, GeometrySpec};
use lbmbench::kernels::{KernelDescriptor, Parity, KERNEL_NAMES};
use lbmbench::lattice::PaddingPolicy;

fn blocks(nx: usize, ny: usize, nz: usize) -> Arc<lbmbench::geometry::FlagField> {
    Arc::new(build_geometry(&GeometrySpec::blocks(nx, ny, nz, 3, 2)).unwrap())
}

#[test]
fn every_kernel_matches_reference_stepper() {
    let ff = blocks(12, 10, 10);
    let state = random_state(ff.dims().cells(), 7, 0.2);
    let g = BodyForce::new([1e-5, -2e-6, 3e-6]).unwrap();
    for k in KernelDescriptor::all() {
        let mut s = loaded(k.clone(), &ff, &state, g, 2);
        let mut r = Reference::new(ff.clone(), wall_of(&k), TrtParams::default(), g, |c| state[c]);
        for _ in 0..8 {
            s.advance(2).unwrap();
            r.step();
            r.step();
        }
        let err = max_rel_diff(&ff, |c| pdfs(&s, c), |c| r.f[c]);
        assert!(err <= 1e-13, "{}: {err:e}", k.name);
    }
}

#[test]
fn equilibrium_is_fixed_point() {
    let ff = blocks(8, 8, 8);
    for k in KernelDescriptor::all() {
        let mut s = solver(k.clone(), &ff, &PaddingPolicy::Auto, TrtParams::default(), BodyForce::ZERO, 1);
        s.advance(4).unwrap();
        for c in (0..ff.dims().cells()).filter(|&c| ff.is_fluid_cell(c)) {
            let f = pdfs(&s, c);
            for d in 0..19 {
                assert!((f[d] - W[d]).abs() <= 1e-15, "{}", k.name);
            }
        }
    }
}

#[test]
fn aa_parity_enforced() {
    let ff = blocks(6, 6, 6);
    for name in ["aa-soa", "list-aa-soa"] {
        let mut s = solver(KernelDescriptor::from_name(name).unwrap(), &ff, &PaddingPolicy::Auto, TrtParams::default(), BodyForce::ZERO, 1);
        assert!(s.step_aa(Parity::Odd).is_err());
        s.step_aa(Parity::Even).unwrap();
        assert!(s.step_aa(Parity::Even).is_err());
        assert!(s.pdfs_at(0).is_err());
        assert!(s.advance(2).is_err());
        s.step_aa(Parity::Odd).unwrap();
        assert!(s.advance(3).is_err());
        assert!(s.step_os().is_err());
    }
}

#[test]
fn advance_composes_and_zero_is_noop() {
    let ff = blocks(10, 8, 8);
    let state = random_state(ff.dims().cells(), 3, 0.1);
    for name in KERNEL_NAMES {
        let k = KernelDescriptor::from_name(name).unwrap();
        let mut a = loaded(k.clone(), &ff, &state, BodyForce::x(1e-5), 1);
        let before = bits(&a);
        a.advance(0).unwrap();
        assert_eq!(bits(&a), before);
        let mut b = loaded(k, &ff, &state, BodyForce::x(1e-5), 1);
        a.advance(4).unwrap();
        b.advance(2).unwrap();
        b.advance(2).unwrap();
        assert_eq!(bits(&a), bits(&b), "{name}");
    }
}

#[test]
fn worker_count_and_blocking_do_not_change_results() {
    let ff = blocks(12, 10, 10);
    let state = random_state(ff.dims().cells(), 11, 0.1);
    for name in KERNEL_NAMES {
        let k = KernelDescriptor::from_name(name).unwrap();
        let mut reference = loaded(k.clone(), &ff, &state, BodyForce::x(1e-5), 1);
        reference.advance(4).unwrap();
        let expected = bits(&reference);
        for (workers, blk) in [(2, 0), (4, 0), (1, 2), (3, 8), (2, 50)] {
            let mut s = loaded(k.clone().with_blk(blk), &ff, &state, BodyForce::x(1e-5), workers);
            s.advance(4).unwrap();
            assert!(bits(&s) == expected, "{name} workers={workers} blk={blk}");
        }
    }
}

#[test]
fn ria_and_pv_bitwise_equal_to_list_aa() {
    let ff = Arc::new(build_geometry(&GeometrySpec::channel(6, 9, 23)).unwrap());
    let state = random_state(ff.dims().cells(), 5, 0.1);
    let mut base = loaded(KernelDescriptor::from_name("list-aa-soa").unwrap(), &ff, &state, BodyForce::x(1e-5), 1);
    base.advance(6).unwrap();
    for w in [1, 2, 4, 8, 16] {
        for name in ["list-aa-ria-soa", "list-aa-pv-soa"] {
            let k = KernelDescriptor::from_name(name).unwrap().with_vector_width(w);
            let mut s = loaded(k, &ff, &state, BodyForce::x(1e-5), 2);
            s.advance(6).unwrap();
            assert!(bits(&s) == bits(&base), "{name} W={w}");
        }
    }
}
