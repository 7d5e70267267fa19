//! Synthetic geometries and the flag field consumed by every lattice builder.

use serde::{Deserialize, Serialize};

use crate::d3q19::C;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeType {
    Fluid,
    Solid,
}

/// Node counts per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub const fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Dims { nx, ny, nz }
    }

    pub const fn cells(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub const fn as_array(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    /// Linear cell index, z fastest.
    #[inline(always)]
    pub const fn cell(&self, x: usize, y: usize, z: usize) -> usize {
        (x * self.ny + y) * self.nz + z
    }

    #[inline]
    pub const fn coord(&self, cell: usize) -> [usize; 3] {
        let z = cell % self.nz;
        let rest = cell / self.nz;
        [rest / self.ny, rest % self.ny, z]
    }

    /// Parses `NXxNYxNZ`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(['x', 'X']).collect();
        let bad = || Error::config(format!("--dims: expected NXxNYxNZ such as 500x100x100, got `{s}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let mut v = [0usize; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p.trim().parse().map_err(|_| bad())?;
            if *slot == 0 {
                return Err(bad());
            }
        }
        Ok(Dims::new(v[0], v[1], v[2]))
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.nx, self.ny, self.nz)
    }
}

/// Result of stepping from a node along a lattice direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Node([usize; 3]),
    SolidHit,
    /// Left the box through a non-periodic face. Callers treat it as solid.
    Outside,
}

/// Per-node fluid/solid flags with per-axis periodicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlagField {
    dims: Dims,
    flags: Vec<NodeType>,
    periodic: [bool; 3],
}

impl FlagField {
    pub fn new(dims: Dims, periodic: [bool; 3], flags: Vec<NodeType>) -> Result<Self> {
        if dims.nx == 0 || dims.ny == 0 || dims.nz == 0 {
            return Err(Error::config(format!("dimensions must be at least 1, got {dims}")));
        }
        if flags.len() != dims.cells() {
            return Err(Error::config(format!(
                "flag array has {} entries, {dims} needs {}",
                flags.len(),
                dims.cells()
            )));
        }
        Ok(FlagField { dims, flags, periodic })
    }

    /// Field of the given dimensions with every node fluid.
    pub fn all_fluid(dims: Dims, periodic: [bool; 3]) -> Result<Self> {
        Self::new(dims, periodic, vec![NodeType::Fluid; dims.cells()])
    }

    pub fn from_fn(
        dims: Dims,
        periodic: [bool; 3],
        mut solid: impl FnMut(usize, usize, usize) -> bool,
    ) -> Result<Self> {
        let mut flags = Vec::with_capacity(dims.cells());
        for x in 0..dims.nx {
            for y in 0..dims.ny {
                for z in 0..dims.nz {
                    flags.push(if solid(x, y, z) { NodeType::Solid } else { NodeType::Fluid });
                }
            }
        }
        Self::new(dims, periodic, flags)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn periodic(&self) -> [bool; 3] {
        self.periodic
    }

    pub fn flags(&self) -> &[NodeType] {
        &self.flags
    }

    #[inline(always)]
    pub fn get(&self, x: usize, y: usize, z: usize) -> NodeType {
        self.flags[self.dims.cell(x, y, z)]
    }

    #[inline(always)]
    pub fn is_fluid_cell(&self, cell: usize) -> bool {
        self.flags[cell] == NodeType::Fluid
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, t: NodeType) {
        let c = self.dims.cell(x, y, z);
        self.flags[c] = t;
    }

    pub fn fluid_count(&self) -> usize {
        fluid_count(self)
    }

    pub fn fluid_fraction(&self) -> f64 {
        self.fluid_count() as f64 / self.dims.cells() as f64
    }

    /// Coordinate reached from `coord` along `c[dir]` without looking at
    /// the flags. `None` when a non-periodic face is crossed.
    #[inline]
    pub fn step(&self, coord: [usize; 3], dir: usize) -> Option<[usize; 3]> {
        let n = self.dims.as_array();
        let mut out = [0usize; 3];
        for a in 0..3 {
            let t = coord[a] as i64 + C[dir][a] as i64;
            let len = n[a] as i64;
            out[a] = if (0..len).contains(&t) {
                t as usize
            } else if self.periodic[a] {
                t.rem_euclid(len) as usize
            } else {
                return None;
            };
        }
        Some(out)
    }

    /// Neighbor of `coord` along direction `dir`.
    pub fn neighbor(&self, coord: [usize; 3], dir: usize) -> Neighbor {
        neighbor(self, coord, dir)
    }
}

/// Number of fluid nodes.
pub fn fluid_count(ff: &FlagField) -> usize {
    ff.flags.iter().filter(|&&t| t == NodeType::Fluid).count()
}

/// Neighbor of `coord` along direction `dir`, wrapping on periodic axes.
pub fn neighbor(ff: &FlagField, coord: [usize; 3], dir: usize) -> Neighbor {
    match ff.step(coord, dir) {
        None => Neighbor::Outside,
        Some(t) if ff.get(t[0], t[1], t[2]) == NodeType::Solid => Neighbor::SolidHit,
        Some(t) => Neighbor::Node(t),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    /// Rectangular duct, periodic in x.
    Channel,
    /// Fluid between two slabs at the z extremes, periodic in x and y.
    Slit,
    /// Staircased circular cross section, periodic in x.
    Pipe,
    /// Fully periodic box with a regular array of cubic obstacles.
    Blocks,
}

impl GeometryKind {
    pub const ALL: [GeometryKind; 4] =
        [GeometryKind::Channel, GeometryKind::Slit, GeometryKind::Pipe, GeometryKind::Blocks];

    pub fn name(self) -> &'static str {
        match self {
            GeometryKind::Channel => "channel",
            GeometryKind::Slit => "slit",
            GeometryKind::Pipe => "pipe",
            GeometryKind::Blocks => "blocks",
        }
    }
}

impl std::str::FromStr for GeometryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GeometryKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::config(format!(
                "--geometry: unknown kind `{s}`, expected one of channel, slit, pipe, blocks (e.g. --geometry channel)"
            ))
        })
    }
}

impl std::fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub kind: GeometryKind,
    pub dims: Dims,
    /// Obstacle edge length (blocks only).
    pub block: usize,
    /// Fluid gap between obstacles (blocks only).
    pub spacing: usize,
}

impl GeometrySpec {
    pub fn new(kind: GeometryKind, dims: Dims) -> Self {
        GeometrySpec { kind, dims, block: 8, spacing: 8 }
    }

    pub fn channel(nx: usize, ny: usize, nz: usize) -> Self {
        Self::new(GeometryKind::Channel, Dims::new(nx, ny, nz))
    }

    pub fn slit(nx: usize, ny: usize, nz: usize) -> Self {
        Self::new(GeometryKind::Slit, Dims::new(nx, ny, nz))
    }

    pub fn pipe(nx: usize, ny: usize, nz: usize) -> Self {
        Self::new(GeometryKind::Pipe, Dims::new(nx, ny, nz))
    }

    pub fn blocks(nx: usize, ny: usize, nz: usize, block: usize, spacing: usize) -> Self {
        GeometrySpec { kind: GeometryKind::Blocks, dims: Dims::new(nx, ny, nz), block, spacing }
    }

    pub fn periodic(&self) -> [bool; 3] {
        match self.kind {
            GeometryKind::Channel | GeometryKind::Pipe => [true, false, false],
            GeometryKind::Slit => [true, true, false],
            GeometryKind::Blocks => [true, true, true],
        }
    }

    /// Radius used for the pipe cross section.
    pub fn pipe_radius(&self) -> f64 {
        (self.dims.ny.min(self.dims.nz) as f64 - 2.0) / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        let Dims { nx, ny, nz } = self.dims;
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::config(format!("--dims: all extents must be >= 1, got {}", self.dims)));
        }
        match self.kind {
            GeometryKind::Channel if ny < 3 || nz < 3 => Err(Error::config(format!(
                "--dims: channel needs ny, nz >= 3 (e.g. 500x100x100), got {}",
                self.dims
            ))),
            GeometryKind::Slit if nz < 3 => Err(Error::config(format!(
                "--dims: slit needs nz >= 3 (e.g. 8x8x34), got {}",
                self.dims
            ))),
            GeometryKind::Pipe if ny.min(nz) < 4 => Err(Error::config(format!(
                "--dims: pipe needs ny, nz >= 4 (e.g. 20x21x21), got {}",
                self.dims
            ))),
            GeometryKind::Blocks => {
                if self.block == 0 {
                    return Err(Error::config("--block: obstacle edge must be >= 1, e.g. --block 4"));
                }
                if self.block + self.spacing > nx.min(ny).min(nz) {
                    return Err(Error::config(format!(
                        "--block/--spacing: block + spacing = {} exceeds the smallest extent of {}",
                        self.block + self.spacing,
                        self.dims
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Builds the flag field of a synthetic geometry.
pub fn build_geometry(spec: &GeometrySpec) -> Result<FlagField> {
    spec.validate()?;
    let Dims { ny, nz, .. } = spec.dims;
    let periodic = spec.periodic();
    let ff = match spec.kind {
        GeometryKind::Channel => FlagField::from_fn(spec.dims, periodic, |_, y, z| {
            y == 0 || y == ny - 1 || z == 0 || z == nz - 1
        })?,
        GeometryKind::Slit => {
            FlagField::from_fn(spec.dims, periodic, |_, _, z| z == 0 || z == nz - 1)?
        }
        GeometryKind::Pipe => {
            let cy = (ny as f64 - 1.0) / 2.0;
            let cz = (nz as f64 - 1.0) / 2.0;
            let r = spec.pipe_radius();
            FlagField::from_fn(spec.dims, periodic, |_, y, z| {
                let dy = y as f64 - cy;
                let dz = z as f64 - cz;
                dy * dy + dz * dz > r * r
            })?
        }
        GeometryKind::Blocks => {
            let period = spec.block + spec.spacing;
            let s = spec.spacing;
            FlagField::from_fn(spec.dims, periodic, |x, y, z| {
                x % period >= s && y % period >= s && z % period >= s
            })?
        }
    };
    Ok(ff)
}

/// Summary printed by the `geometry` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GeometryStats {
    pub kind: GeometryKind,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub periodic: [bool; 3],
    pub fluid_count: usize,
    pub fluid_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pipe_radius: Option<f64>,
}

impl GeometryStats {
    pub fn of(spec: &GeometrySpec, ff: &FlagField) -> Self {
        let blocks = spec.kind == GeometryKind::Blocks;
        GeometryStats {
            kind: spec.kind,
            nx: spec.dims.nx,
            ny: spec.dims.ny,
            nz: spec.dims.nz,
            periodic: ff.periodic(),
            fluid_count: ff.fluid_count(),
            fluid_fraction: ff.fluid_fraction(),
            block: blocks.then_some(spec.block),
            spacing: blocks.then_some(spec.spacing),
            pipe_radius: (spec.kind == GeometryKind::Pipe).then(|| spec.pipe_radius()),
        }
    }
}
