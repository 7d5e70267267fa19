use std::sync::Arc;

use lbmbench::geometry::Dims;
use lbmbench::kernels::KernelDescriptor;
use lbmbench::pool::WorkerPool;
use lbmbench::verification::{analytic_profile, relative_errors, verify_kernel, PoiseuilleCase};

fn case(nz: usize) -> PoiseuilleCase {
    PoiseuilleCase { dims: Dims::new(2, 2, nz), ..Default::default() }
}

fn run(name: &str, c: &PoiseuilleCase) -> lbmbench::verification::VerificationReport {
    let k = KernelDescriptor::from_name(name).unwrap();
    verify_kernel(&k, c, Arc::new(WorkerPool::single())).unwrap()
}

#[test]
fn families_agree_at_steady_state() {
    let c = case(18);
    let list = run("list-aa-soa", &c);
    let full = run("aa-soa", &c);
    assert!(list.passed && full.passed);
    let (linf, _) = relative_errors(&list.simulated, &full.simulated);
    assert!(linf <= 1e-8, "{linf:e}");
}

#[test]
fn profile_is_translation_invariant() {
    let c = PoiseuilleCase { dims: Dims::new(4, 3, 12), ..Default::default() };
    for name in ["blk-push-aos", "list-pull-aos", "list-aa-pv-soa"] {
        let r = run(name, &c);
        assert!(r.transverse_deviation <= 1e-13, "{name}: {:e}", r.transverse_deviation);
        assert!(r.passed, "{name}");
    }
}

#[test]
fn report_shape() {
    let c = case(10);
    let r = run("list-pull-soa", &c);
    assert_eq!(r.simulated.len(), 8);
    assert_eq!(r.analytic, analytic_profile(&c));
    assert!(r.converged);
    assert!(r.linf < 1e-9 && r.l2 < 1e-9);
    // without the half-force shift the profile is off by g/2
    assert!(r.linf_raw > 1e-3);
    assert_eq!(r.steps % c.interval(), 0);
}

#[test]
fn non_convergence_is_reported() {
    let c = PoiseuilleCase { max_steps: 20, check_interval: Some(10), ..case(34) };
    let r = run("aa-soa", &c);
    assert!(!r.converged);
    assert!(!r.passed);
    assert_eq!(r.steps, 20);
}
