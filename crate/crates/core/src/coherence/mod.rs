//! Two-level clock-state qubit: pulses, Ramsey and echo sequences, and
//! dephasing from the differential light shift of atomic motion and from
//! quadratic Zeeman shifts of magnetic field noise.
//!
//! States are `(c0, c1)` with `|0⟩ = |f=3, m=0⟩`, `|1⟩ = |f=4, m=0⟩`. In the
//! frame rotating with the drive, a segment with Rabi frequency Ω, detuning Δ
//! and drive phase ϕ evolves under `H = (ħ/2)·[[−Δ, Ω e^{−iϕ}], [Ω e^{iϕ}, Δ]]`.

mod motional;
mod qubit;
mod rabi;
mod ramsey;
mod zeeman;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::fit::FitError;
use crate::trap::TrapError;

pub use motional::{motional_phase, motional_phase_checkpoints, MotionalEnsemble};
pub use qubit::{evolve_pulse, free_evolution, PulseSequence, QubitState, Segment, SegmentKind};
pub use rabi::{rabi_curve, RabiCurve};
pub use ramsey::{echo_scan, ramsey_scan, ContrastCurve, ScanParams, Sequence};
pub use zeeman::{ou_phase_checkpoints, zeeman_detuning};

/// Ground hyperfine splitting over the trap-light detuning from D2
/// (9.1926 GHz / 210 THz).
pub const DEFAULT_ETA: f64 = 9.192_631_770e9 / 210e12;

#[derive(Debug, Error)]
pub enum CoherenceError {
    #[error("invalid dephasing model: {0}")]
    InvalidModel(String),
    #[error("invalid scan: {0}")]
    InvalidScan(String),
    #[error("contrast {0} at zero delay cannot come from pulse-area jitter (needs 0.5 < C0 ≤ 1)")]
    UnreachableContrast(f64),
    #[error("trajectory sampled at {0:.1} points per trap period, need at least 10")]
    UnderSampled(f64),
    #[error("trajectory left the potential grid")]
    OutsideGrid,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Trap(#[from] TrapError),
    #[error("contrast fit failed: {0}")]
    Fit(#[from] FitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseModel {
    /// One field sample per shot, constant through the sequence.
    QuasiStaticGaussian,
    /// Stationary Ornstein-Uhlenbeck field noise.
    OuProcess { correlation_time: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingModel {
    /// Differential over total light shift of the two qubit states.
    pub eta_differential: f64,
    /// Bias field magnitude, T.
    pub bias_field: f64,
    /// RMS field noise along the bias, T.
    pub field_noise_rms: f64,
    pub noise_model: NoiseModel,
    /// Fringe contrast at zero delay, set by shot-to-shot pulse-area jitter.
    pub raman_contrast_c0: f64,
}

impl Default for DephasingModel {
    fn default() -> Self {
        Self {
            eta_differential: DEFAULT_ETA,
            bias_field: 1.5e-4,
            field_noise_rms: 1e-6,
            noise_model: NoiseModel::QuasiStaticGaussian,
            raman_contrast_c0: 0.9,
        }
    }
}

impl DephasingModel {
    /// No motional, magnetic or pulse-area dephasing.
    pub fn off() -> Self {
        Self {
            eta_differential: 0.0,
            field_noise_rms: 0.0,
            raman_contrast_c0: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), CoherenceError> {
        if !(0.0..1.0).contains(&self.eta_differential) {
            return Err(CoherenceError::InvalidModel(format!(
                "eta_differential {} outside [0, 1)",
                self.eta_differential
            )));
        }
        if !(self.bias_field >= 0.0 && self.bias_field.is_finite()) || !(self.field_noise_rms >= 0.0 && self.field_noise_rms.is_finite()) {
            return Err(CoherenceError::InvalidModel("fields must be finite and non-negative".into()));
        }
        if let NoiseModel::OuProcess { correlation_time } = self.noise_model {
            if !(correlation_time > 0.0 && correlation_time.is_finite()) {
                return Err(CoherenceError::InvalidModel(format!("correlation time {correlation_time}")));
            }
        }
        self.pulse_area_jitter().map(|_| ())
    }

    /// Relative RMS pulse-area jitter σ that yields `raman_contrast_c0` for
    /// two π/2 pulses: `C0 = (1 + exp(−π²σ²/2))/2`.
    pub fn pulse_area_jitter(&self) -> Result<f64, CoherenceError> {
        let c0 = self.raman_contrast_c0;
        if !(c0 > 0.5 && c0 <= 1.0) {
            return Err(CoherenceError::UnreachableContrast(c0));
        }
        Ok((-2.0 * (2.0 * c0 - 1.0).ln()).max(0.0).sqrt() / std::f64::consts::PI)
    }
}
