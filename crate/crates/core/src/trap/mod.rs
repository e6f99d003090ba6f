//! From intensity to a trapping potential, and the trap's figures of merit:
//! minimum, escape barrier, sub-barrier region size and trap frequencies.

mod barrier;
mod calibrate;
mod frequencies;
mod minimum;
mod potential;
mod report;
mod species;

use thiserror::Error;

pub use barrier::{escape_barrier, escape_barrier_parallel, sub_barrier_region, Barrier, BISECTION_DEPTH};
pub use calibrate::{calibrate_waist, CalibrationResult, CalibrationSpec};
pub use frequencies::{trap_frequencies, AxisFit, ANHARMONIC_RESIDUAL};
pub use minimum::{find_minimum, Minimum};
pub use potential::{potential_from_intensity, Interpolation, PotentialGrid};
pub use report::{analyze_trap, TrapReport};
pub use species::{scattering_rate, AtomSpecies, Line, CS133_TOML, SPECIES_SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum TrapError {
    #[error("species data: {0}")]
    Species(String),
    #[error("trap light within 10 GHz of line {line} (detuning {detuning_hz:e} Hz)")]
    NearResonance { line: String, detuning_hz: f64 },
    #[error("polarizability {polarizability_au:.1} a.u. is not negative: trap light is not blue detuned")]
    NotBlueDetuned { polarizability_au: f64 },
    #[error("seed point outside the potential grid")]
    SeedOutsideGrid,
    #[error("minimum search did not converge after {iterations} steps")]
    NonConvergence { iterations: usize },
    #[error("axis {axis}: only {samples} samples below a tenth of the barrier (need 5)")]
    InsufficientResolution { axis: usize, samples: usize },
    #[error("center is not enclosed by a barrier")]
    NotEnclosed,
    #[error("calibration: {0}")]
    Calibration(String),
    #[error(transparent)]
    Optics(#[from] crate::optics::OpticsError),
}
