//! Browser bindings: a small crossed-vortex trap, Rabi flopping and
//! Ramsey/echo contrast, each returning plain arrays for canvas drawing.

use bbt_core::coherence::{echo_scan, rabi_curve, ramsey_scan, CoherenceError, DephasingModel, NoiseModel, ScanParams, DEFAULT_ETA};
use bbt_core::constants::joule_to_uk;
use bbt_core::optics::{crossed_bbt_intensity, slice_extract, BeamSpec, Plane, Polarization};
use bbt_core::trap::{analyze_trap, potential_from_intensity, AtomSpecies, PotentialGrid, TrapReport};
use bbt_core::{Vec3, VolumeSpec};
use wasm_bindgen::prelude::*;

const WAVELENGTH: f64 = 532e-9;
const DIMS: [usize; 3] = [80, 80, 64];
/// Pitches for a 3.5 µm waist at 58 mrad; scaled with the beam geometry.
const BASE_PITCH: [f64; 3] = [0.1e-6, 0.1e-6, 1.2e-6];
const BASE_WAIST: f64 = 3.5e-6;
const BASE_HALF_ANGLE: f64 = 0.058;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// A trap on a coarse grid sized to its beams, with an xz cut through the
/// centre in µK.
#[wasm_bindgen]
pub struct DemoTrap {
    species: AtomSpecies,
    pot: PotentialGrid,
    report: TrapReport,
    slice_uk: Vec<f64>,
    slice_dims: [usize; 2],
    slice_extent_um: [f64; 4],
}

impl DemoTrap {
    pub fn build(waist_um: f64, power_per_beam_w: f64, half_angle_mrad: f64) -> Result<Self, bbt_core::Error> {
        let waist = waist_um * 1e-6;
        let theta = half_angle_mrad * 1e-3;
        let beam = |sign: f64, polarization_tag| BeamSpec {
            wavelength: WAVELENGTH,
            waist_w0: waist,
            power: power_per_beam_w,
            charge_l: 1,
            half_angle_theta: sign * theta,
            polarization_tag,
            focus_offset: Vec3::zeros(),
        };
        let scale_xy = waist / BASE_WAIST;
        let scale_z = scale_xy * BASE_HALF_ANGLE / theta.abs().max(1e-3);
        let pitches = [BASE_PITCH[0] * scale_xy, BASE_PITCH[1] * scale_xy, BASE_PITCH[2] * scale_z];
        let vol = crossed_bbt_intensity(
            &beam(1.0, Polarization::H),
            &beam(-1.0, Polarization::V),
            &VolumeSpec::new(DIMS, pitches),
        )?;
        let species = AtomSpecies::cesium();
        let pot = potential_from_intensity(&vol, &species, WAVELENGTH)?;
        let report = analyze_trap(&pot, species.mass, &Vec3::zeros())?;
        let cut = slice_extract(&vol, Plane::Xz, 0.0)?;
        let slice_uk = cut.values.iter().map(|&i| joule_to_uk(pot.intensity_to_energy * i)).collect();
        let um = |v: &[f64]| (v[0] * 1e6, v[v.len() - 1] * 1e6);
        let ((u0, u1), (v0, v1)) = (um(&cut.axis_u), um(&cut.axis_v));
        Ok(Self {
            species,
            pot,
            report,
            slice_uk,
            slice_dims: [cut.axis_u.len(), cut.axis_v.len()],
            slice_extent_um: [u0, u1, v0, v1],
        })
    }

    pub fn report(&self) -> &TrapReport {
        &self.report
    }

    /// Ramsey and echo contrast, paired by seed, with quasi-static field
    /// noise and, if `light_shift`, the default differential light shift
    /// sampled along thermal trajectories.
    #[allow(clippy::too_many_arguments)]
    pub fn contrast_curves(
        &self,
        td_ms: &[f64],
        light_shift: bool,
        temperature_uk: f64,
        field_noise_ut: f64,
        c0: f64,
        n_atoms: usize,
        seed: u64,
    ) -> Result<(Vec<f64>, Vec<f64>), CoherenceError> {
        let model = DephasingModel {
            eta_differential: if light_shift { DEFAULT_ETA } else { 0.0 },
            field_noise_rms: field_noise_ut * 1e-6,
            noise_model: NoiseModel::QuasiStaticGaussian,
            raman_contrast_c0: c0,
            ..DephasingModel::default()
        };
        let params = ScanParams {
            td_values: td_ms.iter().map(|t| t * 1e-3).collect(),
            n_atoms,
            temperature: temperature_uk * 1e-6,
            phase_steps: 8,
            ..ScanParams::default()
        };
        let ramsey = ramsey_scan(&params, &self.pot, &self.report, &self.species, &model, seed)?;
        let echo = echo_scan(&params, &self.pot, &self.report, &self.species, &model, seed)?;
        Ok((ramsey.contrast, echo.contrast))
    }
}

#[wasm_bindgen]
impl DemoTrap {
    #[wasm_bindgen(constructor)]
    pub fn new(waist_um: f64, power_per_beam_w: f64, half_angle_mrad: f64) -> Result<DemoTrap, JsError> {
        Self::build(waist_um, power_per_beam_w, half_angle_mrad).map_err(js_err)
    }

    /// Potential on the xz plane through the centre, µK, x fastest.
    pub fn slice(&self) -> Vec<f64> {
        self.slice_uk.clone()
    }

    pub fn slice_width(&self) -> usize {
        self.slice_dims[0]
    }

    pub fn slice_height(&self) -> usize {
        self.slice_dims[1]
    }

    /// `[x_min, x_max, z_min, z_max]` in µm.
    pub fn slice_extent(&self) -> Vec<f64> {
        self.slice_extent_um.to_vec()
    }

    pub fn barrier_uk(&self) -> f64 {
        self.report.barrier_uk()
    }

    pub fn enclosed(&self) -> bool {
        self.report.enclosed
    }

    pub fn transverse_um(&self) -> f64 {
        self.report.size_transverse * 1e6
    }

    pub fn axial_um(&self) -> f64 {
        self.report.size_axial * 1e6
    }

    /// Ramsey and echo contrast at `td_ms` delays for atoms at
    /// `temperature_uk`, returned as `[ramsey..., echo...]`.
    #[allow(clippy::too_many_arguments)]
    pub fn contrast(
        &self,
        td_ms: Vec<f64>,
        light_shift: bool,
        temperature_uk: f64,
        field_noise_ut: f64,
        c0: f64,
        n_atoms: usize,
        seed: u64,
    ) -> Result<Vec<f64>, JsError> {
        let (ramsey, echo) = self
            .contrast_curves(&td_ms, light_shift, temperature_uk, field_noise_ut, c0, n_atoms, seed)
            .map_err(js_err)?;
        Ok(ramsey.into_iter().chain(echo).collect())
    }
}

/// Transfer probability from |1⟩ at each `durations_us`, averaged over
/// `shots` with the pulse-area jitter that gives contrast `c0`.
pub fn rabi_transfer(
    durations_us: &[f64],
    rabi_mhz: f64,
    detuning_mhz: f64,
    c0: f64,
    shots: usize,
    seed: u64,
) -> Result<Vec<f64>, CoherenceError> {
    let model = DephasingModel {
        raman_contrast_c0: c0,
        ..DephasingModel::off()
    };
    let two_pi_mhz = 2.0 * std::f64::consts::PI * 1e6;
    let durations: Vec<f64> = durations_us.iter().map(|t| t * 1e-6).collect();
    rabi_curve(&durations, rabi_mhz * two_pi_mhz, detuning_mhz * two_pi_mhz, &model, shots, seed).map(|c| c.transfer)
}

#[wasm_bindgen]
pub fn rabi(durations_us: Vec<f64>, rabi_mhz: f64, detuning_mhz: f64, c0: f64, shots: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    rabi_transfer(&durations_us, rabi_mhz, detuning_mhz, c0, shots, seed).map_err(js_err)
}
