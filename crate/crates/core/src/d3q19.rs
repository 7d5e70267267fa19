//! D3Q19 stencil, macroscopic moments, equilibrium and the TRT collision
//! operator with a constant body force.
//!
//! Direction order: rest first, then the six axis directions, then the
//! twelve diagonals. Directions `2k+1` and `2k+2` are opposite to each
//! other for every `k`, so `opp` only ever flips the lowest bit of the
//! pair position.
//!
//! | idx | c          | idx | c          | idx | c          |
//! |-----|------------|-----|------------|-----|------------|
//! | 0   | ( 0, 0, 0) | 7   | ( 1, 1, 0) | 13  | ( 1, 0,-1) |
//! | 1   | ( 1, 0, 0) | 8   | (-1,-1, 0) | 14  | (-1, 0, 1) |
//! | 2   | (-1, 0, 0) | 9   | ( 1,-1, 0) | 15  | ( 0, 1, 1) |
//! | 3   | ( 0, 1, 0) | 10  | (-1, 1, 0) | 16  | ( 0,-1,-1) |
//! | 4   | ( 0,-1, 0) | 11  | ( 1, 0, 1) | 17  | ( 0, 1,-1) |
//! | 5   | ( 0, 0, 1) | 12  | (-1, 0,-1) | 18  | ( 0,-1, 1) |
//! | 6   | ( 0, 0,-1) |     |            |     |            |

use crate::error::{Error, Result};

/// Number of discrete velocities.
pub const Q: usize = 19;

/// Populations of one node.
pub type NodePdfs = [f64; Q];

/// Discrete velocities.
pub const C: [[i32; 3]; Q] = [
    [0, 0, 0],
    [1, 0, 0],
    [-1, 0, 0],
    [0, 1, 0],
    [0, -1, 0],
    [0, 0, 1],
    [0, 0, -1],
    [1, 1, 0],
    [-1, -1, 0],
    [1, -1, 0],
    [-1, 1, 0],
    [1, 0, 1],
    [-1, 0, -1],
    [1, 0, -1],
    [-1, 0, 1],
    [0, 1, 1],
    [0, -1, -1],
    [0, 1, -1],
    [0, -1, 1],
];

/// Weights as numerators over [`WEIGHT_DENOMINATOR`].
pub const WEIGHT_NUMERATORS: [i64; Q] = [12, 2, 2, 2, 2, 2, 2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1];
pub const WEIGHT_DENOMINATOR: i64 = 36;

const W0: f64 = 1.0 / 3.0;
const W1: f64 = 1.0 / 18.0;
const W2: f64 = 1.0 / 36.0;

/// Lattice weights.
pub const W: [f64; Q] = [
    W0, W1, W1, W1, W1, W1, W1, W2, W2, W2, W2, W2, W2, W2, W2, W2, W2, W2, W2,
];

/// Index of the opposite direction.
pub const OPP: [usize; Q] = [0, 2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 12, 11, 14, 13, 16, 15, 18, 17];

/// Symbolic direction names, mostly for diagnostics.
pub const NAMES: [&str; Q] = [
    "C", "E", "W", "N", "S", "T", "B", "NE", "SW", "SE", "NW", "TE", "BW", "BE", "TW", "TN", "BS",
    "BN", "TS",
];

/// Relaxation parameters of the two-relaxation-time operator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrtParams {
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub magic_lambda: f64,
    pub nu: f64,
}

/// Default magic parameter; puts half-way walls exactly midway between
/// the fluid and the solid layer.
pub const DEFAULT_MAGIC: f64 = 3.0 / 16.0;

impl TrtParams {
    /// Derives ω⁻ and ν from ω⁺ and Λ.
    pub fn new(omega_plus: f64, magic_lambda: f64) -> Result<Self> {
        if !(omega_plus > 0.0 && omega_plus < 2.0) {
            return Err(Error::Domain(format!(
                "omega_plus must lie in (0, 2), got {omega_plus}"
            )));
        }
        if !(magic_lambda > 0.0 && magic_lambda.is_finite()) {
            return Err(Error::Domain(format!(
                "magic parameter must be positive, got {magic_lambda}"
            )));
        }
        let lambda_plus = 1.0 / omega_plus - 0.5;
        let omega_minus = 1.0 / (magic_lambda / lambda_plus + 0.5);
        Ok(TrtParams {
            omega_plus,
            omega_minus,
            magic_lambda,
            nu: lambda_plus / 3.0,
        })
    }

    /// Parameters from the symmetric relaxation time τ⁺ = 1/ω⁺.
    pub fn from_tau(tau_plus: f64, magic_lambda: f64) -> Result<Self> {
        if !(tau_plus > 0.5) {
            return Err(Error::Domain(format!("tau_plus must exceed 1/2, got {tau_plus}")));
        }
        Self::new(1.0 / tau_plus, magic_lambda)
    }

    /// Parameters for a kinematic viscosity in lattice units.
    pub fn from_viscosity(nu: f64, magic_lambda: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::Domain(format!("viscosity must be positive, got {nu}")));
        }
        Self::from_tau(3.0 * nu + 0.5, magic_lambda)
    }
}

impl Default for TrtParams {
    fn default() -> Self {
        TrtParams::from_tau(0.9, DEFAULT_MAGIC).expect("valid defaults")
    }
}

/// Constant acceleration applied to every fluid node.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BodyForce {
    pub g: [f64; 3],
}

impl BodyForce {
    pub const ZERO: BodyForce = BodyForce { g: [0.0; 3] };

    pub fn new(g: [f64; 3]) -> Result<Self> {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("body force must be finite, got {g:?}")));
        }
        Ok(BodyForce { g })
    }

    pub fn x(gx: f64) -> Self {
        BodyForce { g: [gx, 0.0, 0.0] }
    }
}

/// Density and velocity of a node. The force shift is not included.
pub fn macroscopic(f: &NodePdfs) -> Result<(f64, [f64; 3])> {
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidState("non-finite population".into()));
    }
    let mut rho = 0.0;
    let mut j = [0.0; 3];
    for (fi, c) in f.iter().zip(C.iter()) {
        rho += fi;
        for a in 0..3 {
            j[a] += c[a] as f64 * fi;
        }
    }
    Ok((rho, [j[0] / rho, j[1] / rho, j[2] / rho]))
}

/// Second-order equilibrium.
pub fn equilibrium(rho: f64, u: [f64; 3]) -> Result<NodePdfs> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("density must be positive, got {rho}")));
    }
    let usq = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    let mut feq = [0.0; Q];
    for i in 0..Q {
        let cu = C[i][0] as f64 * u[0] + C[i][1] as f64 * u[1] + C[i][2] as f64 * u[2];
        feq[i] = W[i] * rho * (1.0 + 3.0 * cu + 4.5 * cu * cu - 1.5 * usq);
    }
    Ok(feq)
}

/// One TRT collision of a single node, including the body force term.
pub fn trt_collide(f: &NodePdfs, p: &TrtParams, force: &BodyForce) -> NodePdfs {
    let mut lanes = [[0.0; 1]; Q];
    for i in 0..Q {
        lanes[i][0] = f[i];
    }
    collide_lanes::<1>(&mut lanes, p, force);
    let mut out = [0.0; Q];
    for i in 0..Q {
        out[i] = lanes[i][0];
    }
    out
}

/// Collides `L` independent nodes stored as `q[direction][lane]`.
///
/// Every lane runs exactly the arithmetic of [`trt_collide`], so chunked
/// and scalar kernels produce bitwise identical results.
#[inline(always)]
pub fn collide_lanes<const L: usize>(q: &mut [[f64; L]; Q], p: &TrtParams, force: &BodyForce) {
    let omega_p = p.omega_plus;
    let omega_m = p.omega_minus;
    let [gx, gy, gz] = force.g;

    let mut rho = [0.0; L];
    let mut ux = [0.0; L];
    let mut uy = [0.0; L];
    let mut uz = [0.0; L];
    for l in 0..L {
        let mut r = q[0][l];
        for d in 1..Q {
            r += q[d][l];
        }
        let jx = q[1][l] - q[2][l] + q[7][l] - q[8][l] + q[9][l] - q[10][l] + q[11][l] - q[12][l]
            + q[13][l]
            - q[14][l];
        let jy = q[3][l] - q[4][l] + q[7][l] - q[8][l] - q[9][l] + q[10][l] + q[15][l] - q[16][l]
            + q[17][l]
            - q[18][l];
        let jz = q[5][l] - q[6][l] + q[11][l] - q[12][l] - q[13][l] + q[14][l] + q[15][l]
            - q[16][l]
            - q[17][l]
            + q[18][l];
        rho[l] = r;
        ux[l] = jx / r;
        uy[l] = jy / r;
        uz[l] = jz / r;
    }

    for l in 0..L {
        let usq = 1.5 * (ux[l] * ux[l] + uy[l] * uy[l] + uz[l] * uz[l]);
        let e0 = W0 * rho[l] * (1.0 - usq);
        q[0][l] -= omega_p * (q[0][l] - e0);
    }

    macro_rules! pair {
        ($i:literal, $o:literal, $w:expr, $cu:expr, $cg:expr) => {
            for l in 0..L {
                let (ux, uy, uz) = (ux[l], uy[l], uz[l]);
                let usq = 1.5 * (ux * ux + uy * uy + uz * uz);
                let wr = $w * rho[l];
                let cu = $cu(ux, uy, uz);
                let e_plus = wr * (1.0 + 4.5 * cu * cu - usq);
                let e_minus = wr * 3.0 * cu;
                let fi = q[$i][l];
                let fo = q[$o][l];
                let f_plus = 0.5 * (fi + fo);
                let f_minus = 0.5 * (fi - fo);
                let relax_plus = omega_p * (f_plus - e_plus);
                let relax_minus = omega_m * (f_minus - e_minus);
                let forcing = 3.0 * wr * $cg(gx, gy, gz);
                q[$i][l] = fi - relax_plus - relax_minus + forcing;
                q[$o][l] = fo - relax_plus + relax_minus - forcing;
            }
        };
    }
    pair!(1, 2, W1, |x, _y, _z| x, |x, _y, _z| x);
    pair!(3, 4, W1, |_x, y, _z| y, |_x, y, _z| y);
    pair!(5, 6, W1, |_x, _y, z| z, |_x, _y, z| z);
    pair!(7, 8, W2, |x, y, _z| x + y, |x, y, _z| x + y);
    pair!(9, 10, W2, |x, y, _z| x - y, |x, y, _z| x - y);
    pair!(11, 12, W2, |x, _y, z| x + z, |x, _y, z| x + z);
    pair!(13, 14, W2, |x, _y, z| x - z, |x, _y, z| x - z);
    pair!(15, 16, W2, |_x, y, z| y + z, |_x, y, z| y + z);
    pair!(17, 18, W2, |_x, y, z| y - z, |_x, y, z| y - z);
}
