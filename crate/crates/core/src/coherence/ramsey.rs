use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::motional::motional_phase_checkpoints;
use super::qubit::{evolve_pulse, free_evolution, QubitState, Segment};
use super::zeeman::{ou_phase_checkpoints, zeeman_detuning};
use super::{CoherenceError, DephasingModel, NoiseModel};
use crate::fit::{fit_exponential, ExpFit, FitError};
use crate::rng::{stream, Family};
use crate::trap::{AtomSpecies, PotentialGrid, TrapReport};

/// Smallest contrast uncertainty passed to the fit, so noiseless curves
/// remain fittable.
const STDERR_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sequence {
    /// π/2 – td – π/2.
    Ramsey,
    /// π/2 – td/2 – π(phase π/2) – td/2 – π/2.
    Echo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    /// Delays between the first and last pulse, s.
    pub td_values: Vec<f64>,
    pub n_atoms: usize,
    /// Atom temperature, K.
    pub temperature: f64,
    /// Nominal Rabi frequency of the Raman pulses, rad/s.
    pub rabi_frequency: f64,
    /// Phase settings of the final pulse spanning 2π.
    pub phase_steps: usize,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            td_values: (0..12).map(|i| i as f64 * 10e-3).collect(),
            n_atoms: 200,
            temperature: 4e-6,
            rabi_frequency: 2.0 * PI * 1e6,
            phase_steps: 16,
        }
    }
}

impl ScanParams {
    pub fn validate(&self) -> Result<(), CoherenceError> {
        if self.n_atoms < 100 {
            return Err(CoherenceError::InvalidScan(format!(
                "need at least 100 atoms, got {}",
                self.n_atoms
            )));
        }
        if self.phase_steps < 3 {
            return Err(CoherenceError::InvalidScan("need at least 3 phase steps".into()));
        }
        if self.td_values.is_empty() || self.td_values.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(CoherenceError::InvalidScan("delays must be finite and non-negative".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(CoherenceError::InvalidScan(format!("temperature {}", self.temperature)));
        }
        if !(self.rabi_frequency > 0.0 && self.rabi_frequency.is_finite()) {
            return Err(CoherenceError::InvalidScan(format!("rabi frequency {}", self.rabi_frequency)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastCurve {
    pub sequence: Sequence,
    pub td: Vec<f64>,
    pub contrast: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Mean excited population at each phase step, `[td][step]`.
    pub fringes: Vec<Vec<f64>>,
}

impl ContrastCurve {
    /// `C(td) = C0·exp(−td/T2)`; a curve without resolvable decay returns a
    /// fit with infinite `tau`.
    pub fn fit(&self) -> Result<ExpFit, FitError> {
        let sigma: Vec<f64> = self.stderr.iter().map(|s| s.max(STDERR_FLOOR)).collect();
        fit_exponential(&self.td, &self.contrast, &sigma)
    }

    /// First delay where the contrast falls below `C(0)/e`, linearly
    /// interpolated; `None` if it never does within the scan.
    pub fn one_over_e_time(&self) -> Option<f64> {
        let c0 = *self.contrast.first()?;
        let level = c0 / std::f64::consts::E;
        self.td
            .windows(2)
            .zip(self.contrast.windows(2))
            .find_map(|(t, c)| (c[1] < level && c[0] >= level).then(|| t[0] + (c[0] - level) / (c[0] - c[1]) * (t[1] - t[0])))
    }
}

/// Sinusoid `m + b·cos ϕ + c·sin ϕ` through equally spaced phase steps;
/// contrast `2·√(b² + c²)` with its delta-method standard error.
fn fringe_contrast(mean: &[f64], se: &[f64]) -> (f64, f64) {
    let k = mean.len() as f64;
    let (mut b, mut c, mut vb, mut vc, mut cbc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (j, (&m, &s)) in mean.iter().zip(se).enumerate() {
        let (sn, cs) = (2.0 * PI * j as f64 / k).sin_cos();
        b += 2.0 / k * m * cs;
        c += 2.0 / k * m * sn;
        let w = (2.0 / k * s).powi(2);
        vb += w * cs * cs;
        vc += w * sn * sn;
        cbc += w * cs * sn;
    }
    let amp = b.hypot(c);
    let var = if amp > 0.0 {
        (b * b * vb + c * c * vc + 2.0 * b * c * cbc) / (amp * amp)
    } else {
        0.5 * (vb + vc)
    };
    (2.0 * amp, 2.0 * var.max(0.0).sqrt())
}

fn scan(
    sequence: Sequence,
    params: &ScanParams,
    pot: &PotentialGrid,
    report: &TrapReport,
    species: &AtomSpecies,
    model: &DephasingModel,
    seed: u64,
) -> Result<ContrastCurve, CoherenceError> {
    params.validate()?;
    model.validate()?;
    let jitter = model.pulse_area_jitter()?;
    let n_td = params.td_values.len();
    let steps = params.phase_steps;

    // checkpoint layout: every td, then every td/2
    let mut checkpoints: Vec<f64> = params
        .td_values
        .iter()
        .copied()
        .chain(params.td_values.iter().map(|t| 0.5 * t))
        .collect();
    checkpoints.sort_by(f64::total_cmp);
    checkpoints.dedup();
    let slot = |t: f64| checkpoints.partition_point(|&c| c < t);
    let full: Vec<usize> = params.td_values.iter().map(|&t| slot(t)).collect();
    let half: Vec<usize> = params.td_values.iter().map(|&t| slot(0.5 * t)).collect();

    let motion = motional_phase_checkpoints(
        pot,
        report,
        species.mass,
        model.eta_differential,
        params.temperature,
        params.n_atoms,
        &checkpoints,
        seed,
    )?;

    let omega = params.rabi_frequency;
    // population of |1⟩ for every atom, delay and phase step
    let populations: Vec<Vec<f64>> = (0..params.n_atoms)
        .into_par_iter()
        .map(|a| {
            let mut out = vec![0.0; n_td * steps];
            for k in 0..steps {
                let shot = (a * steps + k) as u64;
                let mut jit = stream(seed, Family::RabiJitter, shot);
                let area_scale = 1.0 + jitter * jit.sample::<f64, _>(StandardNormal);
                let mut field = stream(seed, Family::FieldNoise, shot);
                let magnetic: Vec<f64> = match model.noise_model {
                    NoiseModel::QuasiStaticGaussian => {
                        let db = model.field_noise_rms * field.sample::<f64, _>(StandardNormal);
                        let w = zeeman_detuning(model.bias_field, db, species);
                        checkpoints.iter().map(|t| w * t).collect()
                    }
                    NoiseModel::OuProcess { correlation_time } => ou_phase_checkpoints(
                        &checkpoints,
                        model.bias_field,
                        model.field_noise_rms,
                        correlation_time,
                        species,
                        &mut field,
                    ),
                };
                let phase_at = |slot: usize| motion.phases[a][slot] + magnetic[slot];
                let pulse = |area: f64, phase: f64| Segment {
                    rabi_frequency: omega * area_scale,
                    ..Segment::pulse(omega, area, phase)
                };
                let readout_phase = 2.0 * PI * k as f64 / steps as f64;
                for (i, (&f, &h)) in full.iter().zip(&half).enumerate() {
                    let s = evolve_pulse(&QubitState::one(), &pulse(PI / 2.0, 0.0), 0.0);
                    let s = match sequence {
                        Sequence::Ramsey => free_evolution(&s, phase_at(f)),
                        Sequence::Echo => {
                            let first = phase_at(h);
                            let s = free_evolution(&s, first);
                            // π about the orthogonal axis tolerates pulse-area error
                            let s = evolve_pulse(&s, &pulse(PI, PI / 2.0), 0.0);
                            free_evolution(&s, phase_at(f) - first)
                        }
                    };
                    let s = evolve_pulse(&s, &pulse(PI / 2.0, readout_phase), 0.0);
                    out[i * steps + k] = s.p1();
                }
            }
            out
        })
        .collect();

    let n = params.n_atoms as f64;
    let mut contrast = Vec::with_capacity(n_td);
    let mut stderr = Vec::with_capacity(n_td);
    let mut fringes = Vec::with_capacity(n_td);
    for i in 0..n_td {
        let (mean, se): (Vec<f64>, Vec<f64>) = (0..steps)
            .map(|k| {
                let idx = i * steps + k;
                let m = populations.iter().map(|p| p[idx]).sum::<f64>() / n;
                let var = populations.iter().map(|p| (p[idx] - m).powi(2)).sum::<f64>() / (n - 1.0);
                (m, (var / n).sqrt())
            })
            .unzip();
        let (c, e) = fringe_contrast(&mean, &se);
        contrast.push(c);
        stderr.push(e);
        fringes.push(mean);
    }
    Ok(ContrastCurve {
        sequence,
        td: params.td_values.clone(),
        contrast,
        stderr,
        fringes,
    })
}

/// Ramsey fringe contrast versus delay. Each atom follows one thermal
/// trajectory for its motional phase; each (atom, phase step) shot draws
/// its own field-noise record and pulse-area error.
pub fn ramsey_scan(
    params: &ScanParams,
    pot: &PotentialGrid,
    report: &TrapReport,
    species: &AtomSpecies,
    model: &DephasingModel,
    seed: u64,
) -> Result<ContrastCurve, CoherenceError> {
    scan(Sequence::Ramsey, params, pot, report, species, model, seed)
}

/// As [`ramsey_scan`] with a π pulse at td/2. Uses the same per-atom and
/// per-shot streams, so the two scans are paired for equal seeds.
pub fn echo_scan(
    params: &ScanParams,
    pot: &PotentialGrid,
    report: &TrapReport,
    species: &AtomSpecies,
    model: &DephasingModel,
    seed: u64,
) -> Result<ContrastCurve, CoherenceError> {
    scan(Sequence::Echo, params, pot, report, species, model, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fringe_fit_recovers_amplitude() {
        let mean: Vec<f64> = (0..16).map(|k| 0.5 - 0.4 * (2.0 * PI * k as f64 / 16.0 - 0.7).cos()).collect();
        let (c, e) = fringe_contrast(&mean, &[0.0; 16]);
        assert!((c - 0.8).abs() < 1e-12);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn one_over_e_interpolates() {
        let curve = ContrastCurve {
            sequence: Sequence::Ramsey,
            td: vec![0.0, 1.0, 2.0],
            contrast: vec![1.0, 0.5, 0.2],
            stderr: vec![0.01; 3],
            fringes: vec![],
        };
        let t = curve.one_over_e_time().unwrap();
        assert!((t - (1.0 + (0.5 - 1.0 / std::f64::consts::E) / 0.3)).abs() < 1e-12);
    }
}
