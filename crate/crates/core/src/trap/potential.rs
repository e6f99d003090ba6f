use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AtomSpecies, TrapError};
use crate::constants::J_PER_UK;
use crate::grid::{Geometry, Vec3};
use crate::ivol::{read_ivol, write_ivol, IvolError, IvolHeader};
use crate::optics::IntensityVolume;

/// How the sampled potential is evaluated between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Trilinear,
    /// Catmull-Rom tricubic: C¹ and exact for quadratics.
    #[default]
    Tricubic,
}

/// Trapping potential in joules on the geometry of its source intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialGrid {
    pub geometry: Geometry,
    pub values: Vec<f64>,
    /// J per W/m² used to build `values` (zero when built directly).
    pub intensity_to_energy: f64,
}

impl PotentialGrid {
    pub fn from_values(geometry: Geometry, values: Vec<f64>) -> Self {
        assert_eq!(geometry.len(), values.len());
        Self {
            geometry,
            values,
            intensity_to_energy: 0.0,
        }
    }

    /// Sample `f(position)` on every node.
    pub fn from_fn(geometry: Geometry, f: impl Fn(&Vec3) -> f64 + Sync) -> Self {
        let values = (0..geometry.len())
            .into_par_iter()
            .map(|n| f(&geometry.position(geometry.unindex(n))))
            .collect();
        Self::from_values(geometry, values)
    }

    #[inline]
    pub fn at(&self, idx: [usize; 3]) -> f64 {
        self.values[self.geometry.index(idx[0], idx[1], idx[2])]
    }

    pub fn values_uk(&self) -> Vec<f64> {
        self.values.iter().map(|v| v / J_PER_UK).collect()
    }

    /// Interpolated value and gradient, `None` outside the sampled box.
    pub fn sample(&self, p: &Vec3, interp: Interpolation) -> Option<(f64, Vec3)> {
        if !self.geometry.contains(p) {
            return None;
        }
        Some(match interp {
            Interpolation::Trilinear => self.trilinear(p),
            Interpolation::Tricubic => self.tricubic(p),
        })
    }

    pub fn value(&self, p: &Vec3, interp: Interpolation) -> Option<f64> {
        self.sample(p, interp).map(|s| s.0)
    }

    fn cell(&self, p: &Vec3, axis: usize) -> (usize, f64) {
        let g = &self.geometry;
        let f = (p[axis] - g.origin[axis]) / g.pitches[axis];
        let n = g.dims[axis];
        if n < 2 {
            return (0, 0.0);
        }
        let i = (f.floor().max(0.0) as usize).min(n - 2);
        (i, f - i as f64)
    }

    fn trilinear(&self, p: &Vec3) -> (f64, Vec3) {
        let g = &self.geometry;
        let (i, tx) = self.cell(p, 0);
        let (j, ty) = self.cell(p, 1);
        let (k, tz) = self.cell(p, 2);
        let idx = |a: usize, b: usize, c: usize| {
            self.values[g.index((i + a).min(g.dims[0] - 1), (j + b).min(g.dims[1] - 1), (k + c).min(g.dims[2] - 1))]
        };
        let wx = [1.0 - tx, tx];
        let wy = [1.0 - ty, ty];
        let wz = [1.0 - tz, tz];
        let dw = [-1.0, 1.0];
        let mut v = 0.0;
        let mut grad = Vec3::zeros();
        for c in 0..2 {
            for b in 0..2 {
                for a in 0..2 {
                    let u = idx(a, b, c);
                    v += wx[a] * wy[b] * wz[c] * u;
                    grad.x += dw[a] * wy[b] * wz[c] * u;
                    grad.y += wx[a] * dw[b] * wz[c] * u;
                    grad.z += wx[a] * wy[b] * dw[c] * u;
                }
            }
        }
        grad.x /= g.pitches[0];
        grad.y /= g.pitches[1];
        grad.z /= g.pitches[2];
        (v, grad)
    }

    fn tricubic(&self, p: &Vec3) -> (f64, Vec3) {
        let g = &self.geometry;
        let mut base = [0isize; 3];
        let mut w = [[0.0; 4]; 3];
        let mut dw = [[0.0; 4]; 3];
        for a in 0..3 {
            let (i, t) = self.cell(p, a);
            base[a] = i as isize - 1;
            let (t2, t3) = (t * t, t * t * t);
            w[a] = [
                0.5 * (-t3 + 2.0 * t2 - t),
                0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
                0.5 * (-3.0 * t3 + 4.0 * t2 + t),
                0.5 * (t3 - t2),
            ];
            let h = g.pitches[a];
            dw[a] = [
                0.5 * (-3.0 * t2 + 4.0 * t - 1.0) / h,
                0.5 * (9.0 * t2 - 10.0 * t) / h,
                0.5 * (-9.0 * t2 + 8.0 * t + 1.0) / h,
                0.5 * (3.0 * t2 - 2.0 * t) / h,
            ];
        }
        let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
        let ix: [usize; 4] = std::array::from_fn(|a| clamp(base[0] + a as isize, g.dims[0]));
        let iy: [usize; 4] = std::array::from_fn(|a| clamp(base[1] + a as isize, g.dims[1]));
        let iz: [usize; 4] = std::array::from_fn(|a| clamp(base[2] + a as isize, g.dims[2]));

        let mut v = 0.0;
        let mut grad = Vec3::zeros();
        for c in 0..4 {
            for b in 0..4 {
                let row = g.index(0, iy[b], iz[c]);
                let (mut sv, mut sd) = (0.0, 0.0);
                for a in 0..4 {
                    let u = self.values[row + ix[a]];
                    sv += w[0][a] * u;
                    sd += dw[0][a] * u;
                }
                let wyz = w[1][b] * w[2][c];
                v += wyz * sv;
                grad.x += wyz * sd;
                grad.y += dw[1][b] * w[2][c] * sv;
                grad.z += w[1][b] * dw[2][c] * sv;
            }
        }
        (v, grad)
    }

    pub fn write_ivol<W: std::io::Write>(&self, w: W) -> Result<(), IvolError> {
        write_ivol(w, &IvolHeader::new(&self.geometry, "potential", "J"), &self.values)
    }

    pub fn read_ivol<R: std::io::BufRead>(r: R) -> Result<Self, IvolError> {
        let (h, values) = read_ivol(r)?;
        if h.quantity != "potential" {
            return Err(IvolError::Quantity {
                expected: "potential".into(),
                found: h.quantity,
            });
        }
        Ok(Self::from_values(h.geometry(), values))
    }
}

/// Ground-state light-shift potential `U = −α I / (2 ε0 c)` for trap light
/// at `wavelength`. The trap must be blue detuned (α < 0) so that U ≥ 0.
pub fn potential_from_intensity(vol: &IntensityVolume, species: &AtomSpecies, wavelength: f64) -> Result<PotentialGrid, TrapError> {
    let kappa = species.intensity_to_energy(wavelength)?;
    if !(kappa > 0.0) {
        return Err(TrapError::NotBlueDetuned {
            polarizability_au: species.polarizability_au(wavelength)?,
        });
    }
    let values = vol.values.par_iter().map(|&i| kappa * i).collect();
    Ok(PotentialGrid {
        geometry: vol.geometry,
        values,
        intensity_to_energy: kappa,
    })
}
