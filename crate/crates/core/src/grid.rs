//! Uniform sampling grids shared by the optical and potential volumes.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;

/// Transverse sampling grid for a [`crate::optics::ScalarField`], centred so
/// that sample `(nx/2, ny/2)` sits on the optical axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub pitch: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, pitch: f64) -> Self {
        Self { nx, ny, pitch }
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.nx / 2) as f64) * self.pitch
    }

    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - (self.ny / 2) as f64) * self.pitch
    }
}

/// A 3D box sampled on `nx × ny × nz` nodes. Node `(nx/2, ny/2, nz/2)` is the
/// coordinate origin, where the two beams cross.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl VolumeSpec {
    pub fn new(dims: [usize; 3], pitches: [f64; 3]) -> Self {
        Self {
            nx: dims[0],
            ny: dims[1],
            nz: dims[2],
            dx: pitches[0],
            dy: pitches[1],
            dz: pitches[2],
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn pitches(&self) -> [f64; 3] {
        [self.dx, self.dy, self.dz]
    }

    /// Coordinates of node `(0, 0, 0)`.
    pub fn origin(&self) -> Vec3 {
        Vec3::new(
            -((self.nx / 2) as f64) * self.dx,
            -((self.ny / 2) as f64) * self.dy,
            -((self.nz / 2) as f64) * self.dz,
        )
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Geometry of a sampled volume with an arbitrary origin. Storage order is
/// x-fastest: `index = i + nx·(j + ny·k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub dims: [usize; 3],
    pub pitches: [f64; 3],
    pub origin: [f64; 3],
}

impl Geometry {
    pub fn from_spec(spec: &VolumeSpec) -> Self {
        let o = spec.origin();
        Self {
            dims: spec.dims(),
            pitches: spec.pitches(),
            origin: [o.x, o.y, o.z],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let rest = idx / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.pitches[axis]
    }

    pub fn position(&self, idx: [usize; 3]) -> Vec3 {
        Vec3::new(self.coord(0, idx[0]), self.coord(1, idx[1]), self.coord(2, idx[2]))
    }

    /// Upper corner (coordinates of the last node).
    pub fn max_corner(&self) -> Vec3 {
        Vec3::new(
            self.coord(0, self.dims[0] - 1),
            self.coord(1, self.dims[1] - 1),
            self.coord(2, self.dims[2] - 1),
        )
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|a| {
            let lo = self.origin[a];
            let hi = self.coord(a, self.dims[a] - 1);
            p[a] >= lo && p[a] <= hi
        })
    }

    /// Nearest node to `p`, clamped into the grid.
    pub fn nearest(&self, p: &Vec3) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in 0..3 {
            let f = ((p[a] - self.origin[a]) / self.pitches[a]).round();
            out[a] = f.clamp(0.0, (self.dims[a] - 1) as f64) as usize;
        }
        out
    }

    pub fn on_boundary(&self, idx: [usize; 3]) -> bool {
        (0..3).any(|a| idx[a] == 0 || idx[a] + 1 == self.dims[a])
    }

    pub fn cell_volume(&self) -> f64 {
        self.pitches.iter().product()
    }
}
