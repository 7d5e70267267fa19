//! Poiseuille flow between two plates, checked against the parabola.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::d3q19::{BodyForce, TrtParams};
use crate::error::{Error, Result};
use crate::geometry::{build_geometry, Dims, GeometrySpec};
use crate::harness::steady_state_run;
use crate::kernels::{KernelDescriptor, Solver};
use crate::lattice::PaddingPolicy;
use crate::pool::WorkerPool;

/// Relative L∞ error below which a kernel passes.
pub const PASS_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoiseuilleCase {
    /// Slit box: periodic in x and y, solid plates at z = 0 and z = nz - 1.
    pub dims: Dims,
    /// Acceleration along x.
    pub g: f64,
    pub params: TrtParams,
    /// Steps between convergence checks; `None` scales 500 steps at 32
    /// fluid layers with the square of the height.
    pub check_interval: Option<u64>,
    pub rel_tol: f64,
    pub max_steps: u64,
}

impl Default for PoiseuilleCase {
    fn default() -> Self {
        PoiseuilleCase {
            dims: Dims::new(8, 8, 34),
            g: 1e-6,
            params: TrtParams::default(),
            check_interval: None,
            rel_tol: 1e-12,
            max_steps: 400_000,
        }
    }
}

impl PoiseuilleCase {
    pub fn with_nz(mut self, nz: usize) -> Self {
        self.dims.nz = nz;
        self
    }

    /// Number of fluid layers, which is also the plate distance.
    pub fn height(&self) -> usize {
        self.dims.nz - 2
    }

    /// Centerline velocity `g h² / (8 ν)`, a proxy for the Mach number.
    pub fn peak_velocity(&self) -> f64 {
        let h = self.height() as f64;
        self.g * h * h / (8.0 * self.params.nu)
    }

    /// Effective check interval, always even.
    pub fn interval(&self) -> u64 {
        self.check_interval.unwrap_or_else(|| {
            let h = self.height() as f64;
            let steps = (500.0 * h * h / 1024.0).round() as u64;
            (steps + steps % 2).max(2)
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.nz < 6 {
            return Err(Error::config(format!("--dims: nz must be >= 6 (e.g. 8x8x34), got {}", self.dims)));
        }
        if !self.g.is_finite() {
            return Err(Error::config("--g must be finite, e.g. --g 1e-6"));
        }
        if self.peak_velocity().abs() >= 0.05 {
            return Err(Error::config(format!(
                "--g: peak velocity {:.3e} is too large (limit 0.05); use a smaller force such as 1e-6",
                self.peak_velocity()
            )));
        }
        if self.interval() == 0 || self.interval() % 2 != 0 {
            return Err(Error::config("check interval must be even and >= 2, e.g. 500"));
        }
        Ok(())
    }
}

/// Analytical `u_x` for each fluid layer, walls half a link outside the
/// first and last layer.
pub fn analytic_profile(case: &PoiseuilleCase) -> Vec<f64> {
    let h = case.height() as f64;
    (0..case.height())
        .map(|k| {
            let zeta = k as f64 + 0.5;
            case.g / (2.0 * case.params.nu) * (zeta * (h - zeta))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub kernel: String,
    pub dims: Dims,
    pub g: f64,
    pub nu: f64,
    pub steps: u64,
    pub converged: bool,
    /// Layer-averaged `u_x` including the half-force shift `g/2`.
    pub simulated: Vec<f64>,
    /// Layer-averaged `u_x` as returned by the plain moment sum.
    pub simulated_raw: Vec<f64>,
    pub analytic: Vec<f64>,
    pub linf: f64,
    pub l2: f64,
    pub linf_raw: f64,
    pub l2_raw: f64,
    /// Largest deviation of a node from its layer mean, relative to the peak.
    pub transverse_deviation: f64,
    pub passed: bool,
}

/// Relative L∞ and L2 distance of `a` from the reference `b`.
pub fn relative_errors(a: &[f64], b: &[f64]) -> (f64, f64) {
    let peak = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let linf_abs = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let norm: f64 = b.iter().map(|y| y * y).sum();
    if peak == 0.0 {
        return (linf_abs, sq.sqrt());
    }
    (linf_abs / peak, (sq / norm).sqrt())
}

/// Runs `k` on the slit to steady state and compares with the parabola.
pub fn verify_kernel(k: &KernelDescriptor, case: &PoiseuilleCase, pool: Arc<WorkerPool>) -> Result<VerificationReport> {
    case.validate()?;
    let Dims { nx, ny, nz } = case.dims;
    let flags = Arc::new(build_geometry(&GeometrySpec::slit(nx, ny, nz))?);
    let mut solver = Solver::new(k.clone(), flags, &PaddingPolicy::Auto, case.params, BodyForce::x(case.g), pool)?;
    let st = steady_state_run(&mut solver, case.interval(), case.rel_tol, case.max_steps)?;

    let h = case.height();
    let mut sums = vec![0.0; h];
    let mut per_layer: Vec<Vec<f64>> = vec![Vec::with_capacity(nx * ny); h];
    for (cell, _, u) in solver.macroscopic_field()? {
        let z = case.dims.coord(cell)[2];
        per_layer[z - 1].push(u[0]);
        sums[z - 1] += u[0];
    }
    let raw: Vec<f64> = sums.iter().map(|s| s / (nx * ny) as f64).collect();
    let shifted: Vec<f64> = raw.iter().map(|u| u + 0.5 * case.g).collect();
    let analytic = analytic_profile(case);
    let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let spread = per_layer
        .iter()
        .zip(&raw)
        .flat_map(|(layer, mean)| layer.iter().map(move |u| (u - mean).abs()))
        .fold(0.0f64, f64::max);
    let (linf, l2) = relative_errors(&shifted, &analytic);
    let (linf_raw, l2_raw) = relative_errors(&raw, &analytic);
    Ok(VerificationReport {
        kernel: k.name.clone(),
        dims: case.dims,
        g: case.g,
        nu: case.params.nu,
        steps: st.steps,
        converged: st.converged,
        simulated: shifted,
        simulated_raw: raw,
        analytic,
        linf,
        l2,
        linf_raw,
        l2_raw,
        transverse_deviation: if peak > 0.0 { spread / peak } else { spread },
        passed: st.converged && linf < PASS_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_shape() {
        let case = PoiseuilleCase { dims: Dims::new(1, 1, 34), ..Default::default() };
        let p = analytic_profile(&case);
        assert_eq!(p.len(), 32);
        for k in 0..32 {
            assert_eq!(p[k], p[31 - k]);
        }
        // centerline of the continuous profile
        assert!((case.peak_velocity() - 9.6e-4).abs() < 1e-15);
        let h = 32.0;
        let wall = case.g / (2.0 * case.params.nu) * h * (h - h);
        assert_eq!(wall, 0.0);
    }

    #[test]
    fn interval_scales_with_height() {
        assert_eq!(PoiseuilleCase::default().interval(), 500);
        assert_eq!(PoiseuilleCase::default().with_nz(66).interval(), 2000);
        assert_eq!(PoiseuilleCase::default().with_nz(6).interval(), 8);
    }

    #[test]
    fn invalid_cases() {
        assert!(PoiseuilleCase::default().with_nz(5).validate().is_err());
        let fast = PoiseuilleCase { g: 1e-3, ..Default::default() };
        assert!(fast.validate().is_err());
    }

    #[test]
    fn zero_force_is_exact() {
        let case = PoiseuilleCase { dims: Dims::new(2, 2, 8), g: 0.0, ..Default::default() };
        let k = KernelDescriptor::from_name("list-aa-soa").unwrap();
        let r = verify_kernel(&k, &case, Arc::new(WorkerPool::single())).unwrap();
        assert!(r.simulated.iter().all(|u| *u == 0.0));
        assert_eq!(r.linf, 0.0);
        assert_eq!(r.l2, 0.0);
        assert!(r.passed);
    }
}
