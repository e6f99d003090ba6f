//! Vortex beam synthesis and the crossed two-beam intensity distribution.
//!
//! Field normalisation: a [`ScalarField`] amplitude `a` is scaled so that
//! `|a|²` is the local intensity in W/m². Integrated power is therefore
//! `Σ|a|²·pitch²` in watts, and every downstream consumer works in W/m²
//! without an impedance factor.

mod lg;
mod propagate;
mod volume;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Vec3;

pub use lg::{lg_field, lg_intensity_local, ring_radius};
pub use propagate::{evanescent_fraction, propagate};
pub use volume::{crossed_bbt_intensity, slice_extract, IntensityVolume, Plane, Slice2D};

/// Largest accepted tilt of a beam axis from z, in radians.
pub const MAX_HALF_ANGLE: f64 = 0.3;

#[derive(Debug, Error)]
pub enum OpticsError {
    #[error("invalid beam: {0}")]
    InvalidBeam(String),
    #[error("grid too coarse: {samples:.1} samples across the waist (need at least 8)")]
    GridTooCoarse { samples: f64 },
    #[error("grid dimensions must be powers of two, got {nx}×{ny}")]
    GridNotPowerOfTwo { nx: usize, ny: usize },
    #[error("field contains non-finite samples")]
    NonFinite,
    #[error("co-polarised beams would interfere; the two beams need distinct polarisation tags")]
    SamePolarization,
    #[error("slice coordinate {coordinate:e} m outside the volume extent [{min:e}, {max:e}]")]
    SliceOutOfRange { coordinate: f64, min: f64, max: f64 },
    #[error("slice stack does not match: {0}")]
    SliceMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

/// One vortex beam of the BBT, parameterised in its own focal frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSpec {
    pub wavelength: f64,
    pub waist_w0: f64,
    pub power: f64,
    pub charge_l: i32,
    /// Tilt of the beam axis from +z, rotating about y (positive toward +x).
    pub half_angle_theta: f64,
    pub polarization_tag: Polarization,
    /// Position of the beam waist in the lab frame.
    pub focus_offset: Vec3,
}

impl Default for BeamSpec {
    fn default() -> Self {
        Self {
            wavelength: 532e-9,
            waist_w0: 2.3e-6,
            power: 0.24,
            charge_l: 1,
            half_angle_theta: 0.0,
            polarization_tag: Polarization::H,
            focus_offset: Vec3::zeros(),
        }
    }
}

impl BeamSpec {
    pub fn validate(&self) -> Result<(), OpticsError> {
        let bad = |m: &str| Err(OpticsError::InvalidBeam(m.to_owned()));
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return bad("wavelength must be positive");
        }
        if !(self.waist_w0 > 0.0 && self.waist_w0.is_finite()) {
            return bad("waist must be positive");
        }
        if !(self.power >= 0.0 && self.power.is_finite()) {
            return bad("power must be non-negative");
        }
        if !(self.half_angle_theta.abs() < MAX_HALF_ANGLE) {
            return bad("half angle outside the paraxial range |θ| < 0.3 rad");
        }
        if !self.focus_offset.iter().all(|v| v.is_finite()) {
            return bad("focus offset must be finite");
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }

    pub fn rayleigh_range(&self) -> f64 {
        std::f64::consts::PI * self.waist_w0 * self.waist_w0 / self.wavelength
    }

    /// 1/e² radius at distance `z` from the waist.
    pub fn radius_at(&self, z: f64) -> f64 {
        let s = z / self.rayleigh_range();
        self.waist_w0 * (1.0 + s * s).sqrt()
    }

    /// Map a lab-frame point into the beam frame (transverse x', y', axial z').
    #[inline]
    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        let (s, c) = self.half_angle_theta.sin_cos();
        let x = p.x - self.focus_offset.x;
        let y = p.y - self.focus_offset.y;
        let z = p.z - self.focus_offset.z;
        Vec3::new(x * c - z * s, y, x * s + z * c)
    }

    /// Intensity of this beam at a lab-frame point, W/m².
    #[inline]
    pub fn intensity_at(&self, p: &Vec3) -> f64 {
        let q = self.to_local(p);
        lg_intensity_local(self, q.x * q.x + q.y * q.y, q.z)
    }
}

/// Complex field on one transverse plane. See the module docs for units.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub pitch: f64,
    pub z_plane: f64,
    pub wavelength: f64,
    /// Row-major, x fastest: `amplitude[i + nx·j]`.
    pub amplitude: Vec<num_complex::Complex64>,
}

impl ScalarField {
    pub fn grid(&self) -> crate::grid::GridSpec {
        crate::grid::GridSpec::new(self.grid_nx, self.grid_ny, self.pitch)
    }

    pub fn power(&self) -> f64 {
        self.amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.pitch * self.pitch
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn at(&self, i: usize, j: usize) -> num_complex::Complex64 {
        self.amplitude[i + self.grid_nx * j]
    }

    pub fn check_finite(&self) -> Result<(), OpticsError> {
        if self.amplitude.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
            Ok(())
        } else {
            Err(OpticsError::NonFinite)
        }
    }

    /// Multiply by the spiral phase `exp(i·l·atan2(y, x))`, as imprinted by a
    /// spiral phase plate of charge `l`.
    pub fn spp_apply(&self, charge_l: i32) -> Result<ScalarField, OpticsError> {
        self.check_finite()?;
        let mut out = self.clone();
        if charge_l == 0 {
            return Ok(out);
        }
        let grid = self.grid();
        let l = charge_l as f64;
        for j in 0..self.grid_ny {
            let y = grid.y(j);
            for i in 0..self.grid_nx {
                let x = grid.x(i);
                let a = &mut out.amplitude[i + self.grid_nx * j];
                // the phase averages to zero over the sample at the singularity
                if x == 0.0 && y == 0.0 {
                    *a = num_complex::Complex64::new(0.0, 0.0);
                } else {
                    *a *= num_complex::Complex64::from_polar(1.0, l * y.atan2(x));
                }
            }
        }
        Ok(out)
    }
}

/// Free-function form of [`ScalarField::spp_apply`].
pub fn spp_apply(field: &ScalarField, charge_l: i32) -> Result<ScalarField, OpticsError> {
    field.spp_apply(charge_l)
}

/// Fundamental Gaussian (LG00) at its waist, normalised to `power` on the
/// grid. Input for the spiral-phase-plate route.
pub fn gaussian_field(wavelength: f64, waist_w0: f64, power: f64, grid: crate::grid::GridSpec) -> Result<ScalarField, OpticsError> {
    let spec = BeamSpec {
        wavelength,
        waist_w0,
        power,
        charge_l: 0,
        ..BeamSpec::default()
    };
    lg_field(&spec, grid, 0.0)
}
