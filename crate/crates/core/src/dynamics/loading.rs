use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::thermal::in_cell;
use super::{kinetic_energy, DynamicsError};
use crate::constants::K_B;
use crate::grid::Vec3;
use crate::rng::{stream, Family};
use crate::trap::{Interpolation, PotentialGrid, TrapReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadingParams {
    /// Cold-cloud density at trap switch-on, 1/m³.
    pub mot_density: f64,
    /// Cloud temperature after sub-Doppler cooling, K.
    pub temperature: f64,
    /// Probability that a trap holding at least one atom ends with exactly one.
    pub blockade_p1: f64,
    /// Scale applied to `blockade_p1`.
    pub normalization: f64,
}

impl Default for LoadingParams {
    fn default() -> Self {
        Self {
            mot_density: 1e17,
            temperature: 20e-6,
            blockade_p1: 0.526,
            normalization: 1.0,
        }
    }
}

impl LoadingParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let p = self.blockade_p1 * self.normalization;
        if !(self.mot_density >= 0.0 && self.mot_density.is_finite()) {
            return Err(DynamicsError::InvalidParameter(format!("mot density {}", self.mot_density)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(DynamicsError::InvalidTemperature(self.temperature));
        }
        if !(0.0..=1.0).contains(&self.blockade_p1) || !(0.0..=1.0).contains(&p) {
            return Err(DynamicsError::InvalidParameter(format!(
                "blockade probability {} × {} outside [0, 1]",
                self.blockade_p1, self.normalization
            )));
        }
        Ok(())
    }
}

/// The trap as seen by the loading model: its sub-barrier cells and the
/// energy an atom must stay below to be held.
#[derive(Debug, Clone)]
pub struct LoadingTrap<'a> {
    pub pot: &'a PotentialGrid,
    pub cells: Vec<usize>,
    pub barrier_energy: f64,
    pub mass: f64,
}

impl<'a> LoadingTrap<'a> {
    pub fn from_report(pot: &'a PotentialGrid, report: &TrapReport, mass: f64) -> Self {
        Self {
            pot,
            cells: report.region(pot),
            barrier_energy: report.barrier_energy,
            mass,
        }
    }

    pub fn region_volume(&self) -> f64 {
        self.cells.len() as f64 * self.pot.geometry.cell_volume()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadingOutcome {
    /// Atoms inside the region with total energy below the barrier at switch-on.
    pub captured: u32,
    /// Final occupancy after blockade: always 0 or 1.
    pub occupancy: u8,
}

fn capture_count(params: &LoadingParams, trap: &LoadingTrap, rng: &mut ChaCha8Rng) -> Result<u32, DynamicsError> {
    let mean = params.mot_density * trap.region_volume();
    if mean <= 0.0 || trap.cells.is_empty() {
        return Ok(0);
    }
    let n = Poisson::new(mean)
        .map_err(|e| DynamicsError::InvalidParameter(e.to_string()))?
        .sample(rng) as u64;
    let speed =
        Normal::new(0.0, (K_B * params.temperature / trap.mass).sqrt()).map_err(|e| DynamicsError::InvalidParameter(e.to_string()))?;
    let mut captured = 0;
    for _ in 0..n {
        let p = in_cell(trap.pot, trap.cells[rng.random_range(0..trap.cells.len())], rng);
        let v = Vec3::from_fn(|_, _| speed.sample(rng));
        let u = trap.pot.value(&p, Interpolation::default()).unwrap_or(f64::INFINITY);
        if kinetic_energy(&v, trap.mass) + u < trap.barrier_energy {
            captured += 1;
        }
    }
    Ok(captured)
}

/// One loading cycle. Cloud atoms present in the sub-barrier region when the
/// light switches on are kept if their total energy is below the barrier;
/// the rest fall away. Any nonzero capture then collapses to one atom with
/// probability `blockade_p1 · normalization`, otherwise to none.
pub fn simulate_loading(params: &LoadingParams, trap: &LoadingTrap, seed: u64, trial: u64) -> Result<LoadingOutcome, DynamicsError> {
    params.validate()?;
    let mut rng = stream(seed, Family::Loading, trial);
    let captured = capture_count(params, trap, &mut rng)?;
    let occupancy = u8::from(captured > 0 && rng.random::<f64>() < params.blockade_p1 * params.normalization);
    Ok(LoadingOutcome { captured, occupancy })
}

/// `n_trials` independent cycles, trial `i` on stream `i`.
pub fn run_loading(params: &LoadingParams, trap: &LoadingTrap, n_trials: usize, seed: u64) -> Result<Vec<LoadingOutcome>, DynamicsError> {
    params.validate()?;
    (0..n_trials as u64)
        .into_par_iter()
        .map(|i| simulate_loading(params, trap, seed, i))
        .collect()
}
