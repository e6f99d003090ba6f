use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrate::{integrate_trajectory, Fate, Integrator, RecoilHeating};
use super::thermal::{sample_thermal, Region};
use super::{binomial_estimate, DynamicsError, LossModel};
use crate::constants::K_B;
use crate::fit::{fit_exponential, ExpFit, FitError};
use crate::rng::{stream, Family};
use crate::trap::{PotentialGrid, TrapReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetentionMode {
    /// Exponential background loss plus mean-field recoil heating of a
    /// harmonically bound atom.
    #[default]
    Analytic,
    /// Full trajectories on the potential grid (slow for second-scale holds).
    Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionParams {
    pub n_atoms: usize,
    pub hold_times: Vec<f64>,
    /// Temperature of the trapped atoms at the start of the hold, K.
    pub temperature: f64,
    pub mode: RetentionMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionCurve {
    pub hold_times: Vec<f64>,
    pub survival: Vec<f64>,
    pub stderr: Vec<f64>,
    pub survivors: Vec<usize>,
    pub n_atoms: usize,
}

impl RetentionCurve {
    /// Weighted fit of `A·exp(−t/τ)`. All-surviving or all-lost data carry
    /// no decay information and are rejected.
    pub fn fit(&self) -> Result<ExpFit, FitError> {
        if self.survivors.iter().all(|&k| k == self.n_atoms) {
            return Err(FitError::Degenerate("every atom survived every hold".into()));
        }
        if self.survivors.iter().all(|&k| k == 0) {
            return Err(FitError::Degenerate("no atom survived any hold".into()));
        }
        fit_exponential(&self.hold_times, &self.survival, &self.stderr)
    }
}

/// Heating escape time for an atom starting at energy `e0` above the trap
/// floor: `E(t) = e0·exp(γt)` reaches the barrier height at
/// `ln(barrier/e0)/γ`. For a harmonic trap the mean potential energy is E/2,
/// so `γ = rate_per_energy · energy_per_event / 2`.
fn heating_escape_time(e0: f64, barrier_height: f64, gamma: f64) -> f64 {
    if gamma <= 0.0 {
        f64::INFINITY
    } else {
        (barrier_height / e0).ln().max(0.0) / gamma
    }
}

fn analytic_survives(
    t: f64,
    rng: &mut ChaCha8Rng,
    loss_rate: f64,
    gamma: f64,
    kt: f64,
    barrier_height: f64,
) -> Result<bool, DynamicsError> {
    let t_loss = if loss_rate > 0.0 {
        Exp::new(loss_rate)
            .map_err(|e| DynamicsError::InvalidParameter(e.to_string()))?
            .sample(rng)
    } else {
        f64::INFINITY
    };
    // energy of a thermal atom in a 3D harmonic well is Gamma(3, kT);
    // only atoms bound at the start of the hold count
    let energy = Gamma::new(3.0, kt).map_err(|e| DynamicsError::InvalidParameter(e.to_string()))?;
    let mut e0 = energy.sample(rng);
    let mut tries = 0;
    while e0 >= barrier_height {
        tries += 1;
        if tries > 10_000 {
            return Err(DynamicsError::InvalidParameter("temperature far above the barrier".into()));
        }
        e0 = energy.sample(rng);
    }
    Ok(t < t_loss && t < heating_escape_time(e0, barrier_height, gamma))
}

/// Survival fraction after each hold time, with fresh atoms for every hold
/// time. Atom `a` of hold `h` uses stream `h·n + a`.
pub fn simulate_retention(
    params: &RetentionParams,
    pot: &PotentialGrid,
    report: &TrapReport,
    loss: &LossModel,
    heating: Option<&RecoilHeating>,
    mass: f64,
    seed: u64,
) -> Result<RetentionCurve, DynamicsError> {
    loss.validate()?;
    if params.n_atoms == 0 {
        return Err(DynamicsError::InvalidParameter("n_atoms must be at least 1".into()));
    }
    if !(params.temperature > 0.0 && params.temperature.is_finite()) {
        return Err(DynamicsError::InvalidTemperature(params.temperature));
    }
    if params.hold_times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(DynamicsError::InvalidParameter("hold times must be finite and non-negative".into()));
    }
    let heating = heating.filter(|_| loss.heating_enabled());
    let n = params.n_atoms;
    let survivors: Vec<usize> = match params.mode {
        RetentionMode::Analytic => {
            let kt = K_B * params.temperature;
            let barrier_height = report.barrier_height();
            let gamma = heating.map_or(0.0, |h| 0.5 * h.rate_per_energy * h.energy_per_event(mass));
            let loss_rate = loss.loss_rate();
            params
                .hold_times
                .iter()
                .enumerate()
                .map(|(h, &t)| {
                    (0..n)
                        .into_par_iter()
                        .map(|a| {
                            let mut rng = stream(seed, Family::Retention, (h * n + a) as u64);
                            analytic_survives(t, &mut rng, loss_rate, gamma, kt, barrier_height).map(usize::from)
                        })
                        .sum::<Result<usize, _>>()
                })
                .collect::<Result<_, _>>()?
        }
        RetentionMode::Trajectory => {
            let omega = report
                .max_frequency()
                .ok_or_else(|| DynamicsError::InvalidParameter("trap frequencies unresolved".into()))?;
            let integ = Integrator::for_trap(mass, omega);
            let cells = report.region(pot);
            let region = Region::Boltzmann { pot, cells: &cells };
            let mut out = Vec::with_capacity(params.hold_times.len());
            for (h, &t) in params.hold_times.iter().enumerate() {
                let atoms = sample_thermal(n, params.temperature, mass, &region, seed ^ (h as u64).rotate_left(32))?;
                let steps = (t / integ.dt).round() as usize;
                let alive = atoms
                    .into_par_iter()
                    .enumerate()
                    .map(|(a, atom)| {
                        let mut rng = stream(seed, Family::Trajectory, (h * n + a) as u64);
                        let rec = integrate_trajectory(atom, pot, &integ, steps, loss, heating, &mut rng, |_, _, _| {})?;
                        Ok(usize::from(
                            matches!(rec.fate, Fate::Alive) && rec.final_state.energy_cache < report.barrier_energy,
                        ))
                    })
                    .sum::<Result<usize, DynamicsError>>()?;
                out.push(alive);
            }
            out
        }
    };
    let (survival, stderr): (Vec<f64>, Vec<f64>) = survivors.iter().map(|&k| binomial_estimate(k, n)).unzip();
    Ok(RetentionCurve {
        hold_times: params.hold_times.clone(),
        survival,
        stderr,
        survivors,
        n_atoms: n,
    })
}
