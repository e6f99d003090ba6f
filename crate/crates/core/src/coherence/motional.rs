use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CoherenceError;
use crate::constants::HBAR;
use crate::dynamics::{integrate_trajectory, sample_thermal, Fate, Integrator, LossModel, Region};
use crate::rng::{stream, Family};
use crate::trap::{PotentialGrid, TrapReport};

/// Differential phase `η/ħ·∫U dt` of a potential record sampled every `dt`
/// (trapezoid rule). `max_frequency` (rad/s) guards against records with
/// fewer than 10 samples per trap period.
pub fn motional_phase(potentials: &[f64], dt: f64, eta: f64, max_frequency: f64) -> Result<f64, CoherenceError> {
    let per_period = 2.0 * std::f64::consts::PI / (max_frequency * dt);
    if per_period < 10.0 {
        return Err(CoherenceError::UnderSampled(per_period));
    }
    let integral: f64 = potentials.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum();
    Ok(eta * integral / HBAR)
}

/// Motional phases of a thermal ensemble read at common checkpoint times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionalEnsemble {
    pub checkpoints: Vec<f64>,
    /// `phases[atom][checkpoint]`, rad.
    pub phases: Vec<Vec<f64>>,
    pub dt: f64,
}

/// Follow `n_atoms` atoms drawn from a thermal distribution at `temperature`
/// inside the sub-barrier region, accumulating `η/ħ·∫U dt` along each
/// trajectory and reading it at the sorted `checkpoints` (s). Loss and
/// heating are off; an atom leaving the grid is an error.
#[allow(clippy::too_many_arguments)]
pub fn motional_phase_checkpoints(
    pot: &PotentialGrid,
    report: &TrapReport,
    mass: f64,
    eta: f64,
    temperature: f64,
    n_atoms: usize,
    checkpoints: &[f64],
    seed: u64,
) -> Result<MotionalEnsemble, CoherenceError> {
    if checkpoints.windows(2).any(|w| w[1] < w[0]) || checkpoints.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(CoherenceError::InvalidScan(
            "checkpoints must be sorted, finite and non-negative".into(),
        ));
    }
    if eta == 0.0 {
        return Ok(MotionalEnsemble {
            checkpoints: checkpoints.to_vec(),
            phases: vec![vec![0.0; checkpoints.len()]; n_atoms],
            dt: 0.0,
        });
    }
    let omega = report
        .max_frequency()
        .ok_or_else(|| CoherenceError::InvalidScan("trap frequencies unresolved".into()))?;
    let integ = Integrator::for_trap(mass, omega);
    let dt = integ.dt;
    let end = checkpoints.last().copied().unwrap_or(0.0);
    let steps = (end / dt).ceil() as usize + 1;
    let cells = report.region(pot);
    let atoms = sample_thermal(n_atoms, temperature, mass, &Region::Boltzmann { pot, cells: &cells }, seed)?;
    let scale = eta / HBAR;

    let phases = atoms
        .into_par_iter()
        .enumerate()
        .map(|(a, atom)| {
            let mut rng = stream(seed, Family::Trajectory, a as u64);
            let mut out = vec![0.0; checkpoints.len()];
            let mut next = checkpoints.iter().take_while(|&&t| t <= 0.0).count();
            let mut phase = 0.0;
            let mut u_prev = 0.0;
            let rec = integrate_trajectory(atom, pot, &integ, steps, &LossModel::none(), None, &mut rng, |step, _, u| {
                if step == 0 {
                    u_prev = u;
                    return;
                }
                let prev = phase;
                phase += scale * 0.5 * (u_prev + u) * dt;
                u_prev = u;
                let t = step as f64 * dt;
                while next < checkpoints.len() && checkpoints[next] <= t {
                    let frac = (checkpoints[next] - (t - dt)) / dt;
                    out[next] = prev + frac * (phase - prev);
                    next += 1;
                }
            })?;
            if let Fate::Escaped { .. } = rec.fate {
                return Err(CoherenceError::OutsideGrid);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MotionalEnsemble {
        checkpoints: checkpoints.to_vec(),
        phases,
        dt,
    })
}
