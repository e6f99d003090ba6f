//! Monte Carlo single-atom dynamics: thermal sampling, trajectories with
//! recoil heating and background loss, collisional-blockade loading, photon
//! count histograms and retention curves.
//!
//! Every stochastic draw comes from a counter-based stream keyed by
//! (seed, family, work-unit index), so results do not depend on scheduling.

mod counts;
mod integrate;
mod loading;
mod retention;
mod thermal;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::FitError;
use crate::grid::Vec3;
use crate::trap::{Interpolation, PotentialGrid, TrapError};

pub use counts::{classify_counts, poisson_misclassification, simulate_count_histogram, CountHistogram};
pub use integrate::{integrate_trajectory, Fate, Integrator, RecoilHeating, TrajectoryRecord};
pub use loading::{run_loading, simulate_loading, LoadingOutcome, LoadingParams, LoadingTrap};
pub use retention::{simulate_retention, RetentionCurve, RetentionMode, RetentionParams};
pub use thermal::{sample_thermal, Region};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("temperature must be positive and finite, got {0} K")]
    InvalidTemperature(f64),
    #[error("sampling region is empty")]
    EmptyRegion,
    #[error("time step {dt} s exceeds the stability limit 1/(10·{omega_max} rad/s)")]
    TimeStep { dt: f64, omega_max: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("atom starts outside the potential grid")]
    OutsideGrid,
    #[error(transparent)]
    Trap(#[from] TrapError),
    #[error("retention fit failed: {0}")]
    Fit(#[from] FitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub alive: bool,
    /// Kinetic plus potential energy at the last update, J.
    pub energy_cache: f64,
}

impl AtomState {
    /// Atom at rest-frame state `(position, velocity)` with its energy taken
    /// from `pot`; `None` if the position lies outside the grid.
    pub fn new(position: Vec3, velocity: Vec3, mass: f64, pot: &PotentialGrid, interp: Interpolation) -> Option<Self> {
        let u = pot.value(&position, interp)?;
        Some(Self {
            position,
            velocity,
            alive: true,
            energy_cache: kinetic_energy(&velocity, mass) + u,
        })
    }

    pub fn kinetic_energy(&self, mass: f64) -> f64 {
        kinetic_energy(&self.velocity, mass)
    }
}

pub fn kinetic_energy(v: &Vec3, mass: f64) -> f64 {
    0.5 * mass * v.norm_squared()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    /// Background-collision loss rate with the readout light off, 1/s.
    pub background_rate_dark: f64,
    /// Multiplier on the loss rate while the readout light is on.
    pub bright_excess_factor: f64,
    pub readout_on: bool,
    pub recoil_heating_on: bool,
    /// Multiplier on the trap-light scattering rate used for recoil heating.
    pub heating_multiplier: f64,
}

impl Default for LossModel {
    fn default() -> Self {
        Self {
            background_rate_dark: 1.0 / 6.0,
            bright_excess_factor: 6.0 / 3.8,
            readout_on: false,
            recoil_heating_on: true,
            heating_multiplier: 1.0,
        }
    }
}

impl LossModel {
    pub fn none() -> Self {
        Self {
            background_rate_dark: 0.0,
            bright_excess_factor: 1.0,
            readout_on: false,
            recoil_heating_on: false,
            heating_multiplier: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let ok = self.background_rate_dark >= 0.0
            && self.background_rate_dark.is_finite()
            && self.bright_excess_factor >= 1.0
            && self.bright_excess_factor.is_finite()
            && self.heating_multiplier >= 0.0
            && self.heating_multiplier.is_finite();
        if ok {
            Ok(())
        } else {
            Err(DynamicsError::InvalidParameter(format!("loss model {self:?}")))
        }
    }

    /// Background loss rate for the current readout setting, 1/s.
    pub fn loss_rate(&self) -> f64 {
        if self.readout_on {
            self.background_rate_dark * self.bright_excess_factor
        } else {
            self.background_rate_dark
        }
    }

    pub fn heating_enabled(&self) -> bool {
        self.recoil_heating_on && self.heating_multiplier > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterModel {
    /// Detected fluorescence count rate of one atom, counts/s.
    pub atom_count_rate: f64,
    pub background_count_rate: f64,
    /// Counter gate time, s.
    pub integration_time: f64,
}

impl Default for CounterModel {
    fn default() -> Self {
        Self {
            atom_count_rate: 1000.0,
            background_count_rate: 150.0,
            integration_time: 0.1,
        }
    }
}

impl CounterModel {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let ok = [self.atom_count_rate, self.background_count_rate]
            .iter()
            .all(|r| *r >= 0.0 && r.is_finite())
            && self.integration_time > 0.0
            && self.integration_time.is_finite();
        if ok {
            Ok(())
        } else {
            Err(DynamicsError::InvalidParameter(format!("counter model {self:?}")))
        }
    }

    /// Mean counts per gate for a given occupancy.
    pub fn mean_counts(&self, occupancy: u8) -> f64 {
        (self.background_count_rate + occupancy as f64 * self.atom_count_rate) * self.integration_time
    }
}

/// Binomial proportion with a standard error that stays positive at 0 and 1
/// (Agresti-Coull style `p̃ = (k+1)/(n+2)`).
pub fn binomial_estimate(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = successes as f64 / trials as f64;
    let pt = (successes as f64 + 1.0) / (trials as f64 + 2.0);
    (p, (pt * (1.0 - pt) / trials as f64).sqrt())
}
