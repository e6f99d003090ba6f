use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::qubit::{evolve_pulse, QubitState, Segment, SegmentKind};
use super::{CoherenceError, DephasingModel};
use crate::rng::{stream, Family};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiCurve {
    pub durations: Vec<f64>,
    /// Mean population transferred from |1⟩ to |0⟩.
    pub transfer: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Transfer probability versus pulse length for a drive of nominal Rabi
/// frequency `omega` and detuning `detuning` (rad/s), averaged over `shots`
/// shots with the model's pulse-area jitter.
pub fn rabi_curve(
    durations: &[f64],
    omega: f64,
    detuning: f64,
    model: &DephasingModel,
    shots: usize,
    seed: u64,
) -> Result<RabiCurve, CoherenceError> {
    if shots < 2 {
        return Err(CoherenceError::InvalidScan("need at least 2 shots".into()));
    }
    if durations.iter().any(|d| !(*d >= 0.0 && d.is_finite())) || !(omega > 0.0 && omega.is_finite()) {
        return Err(CoherenceError::InvalidScan(
            "durations and Rabi frequency must be finite and positive".into(),
        ));
    }
    let jitter = model.pulse_area_jitter()?;
    let per_shot: Vec<Vec<f64>> = (0..shots)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream(seed, Family::RabiJitter, s as u64);
            let scale = 1.0 + jitter * rng.sample::<f64, _>(StandardNormal);
            durations
                .iter()
                .map(|&t| {
                    let seg = Segment {
                        kind: SegmentKind::Pulse,
                        rabi_frequency: omega * scale,
                        detuning,
                        duration: t,
                        phase: 0.0,
                    };
                    evolve_pulse(&QubitState::one(), &seg, 0.0).p0()
                })
                .collect()
        })
        .collect();
    let n = shots as f64;
    let (transfer, stderr) = (0..durations.len())
        .map(|i| {
            let m = per_shot.iter().map(|p| p[i]).sum::<f64>() / n;
            let v = per_shot.iter().map(|p| (p[i] - m).powi(2)).sum::<f64>() / (n - 1.0);
            (m, (v / n).sqrt())
        })
        .unzip();
    Ok(RabiCurve {
        durations: durations.to_vec(),
        transfer,
        stderr,
    })
}
