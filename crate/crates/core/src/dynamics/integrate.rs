use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, UnitSphere};
use serde::{Deserialize, Serialize};

use super::{kinetic_energy, AtomState, DynamicsError, LossModel};
use crate::constants::HBAR;
use crate::grid::Vec3;
use crate::trap::{AtomSpecies, Interpolation, PotentialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integrator {
    pub dt: f64,
    pub mass: f64,
    pub interpolation: Interpolation,
    /// Highest trap frequency, rad/s; enables the step-size check.
    pub max_frequency: Option<f64>,
}

impl Integrator {
    /// Step of `1/(50·ω_max)`.
    pub fn for_trap(mass: f64, max_frequency: f64) -> Self {
        Self {
            dt: 1.0 / (50.0 * max_frequency),
            mass,
            interpolation: Interpolation::default(),
            max_frequency: Some(max_frequency),
        }
    }

    pub fn check(&self) -> Result<(), DynamicsError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.mass > 0.0) {
            return Err(DynamicsError::InvalidParameter(format!("dt {} mass {}", self.dt, self.mass)));
        }
        match self.max_frequency {
            Some(w) if self.dt * 10.0 * w >= 1.0 => Err(DynamicsError::TimeStep { dt: self.dt, omega_max: w }),
            _ => Ok(()),
        }
    }
}

/// Photon scattering from the trap light. The local scattering rate is
/// proportional to intensity, hence to the local potential; each event gives
/// one effective kick of `√2·ħk` in a random direction (absorption plus
/// spontaneous emission).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoilHeating {
    /// Scattering events per second per joule of potential.
    pub rate_per_energy: f64,
    /// Speed change per event, m/s.
    pub kick_speed: f64,
}

impl RecoilHeating {
    pub fn new(species: &AtomSpecies, wavelength: f64, pot: &PotentialGrid, multiplier: f64) -> Result<Self, DynamicsError> {
        if !(pot.intensity_to_energy > 0.0) {
            return Err(DynamicsError::InvalidParameter(
                "potential carries no intensity scale for recoil heating".into(),
            ));
        }
        let per_intensity = species.scattering_per_intensity(wavelength)?;
        let k = 2.0 * std::f64::consts::PI / wavelength;
        Ok(Self {
            rate_per_energy: multiplier * per_intensity / pot.intensity_to_energy,
            kick_speed: std::f64::consts::SQRT_2 * HBAR * k / species.mass,
        })
    }

    pub fn rate(&self, potential: f64) -> f64 {
        self.rate_per_energy * potential.max(0.0)
    }

    /// Mean energy gain per event for a mass `m`.
    pub fn energy_per_event(&self, mass: f64) -> f64 {
        0.5 * mass * self.kick_speed * self.kick_speed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fate", rename_all = "snake_case")]
pub enum Fate {
    Alive,
    /// Removed by a background-loss event at `time`.
    Lost {
        time: f64,
    },
    /// Left the sampled volume at `time`.
    Escaped {
        time: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub final_state: AtomState,
    pub fate: Fate,
    pub steps_taken: usize,
    pub initial_energy: f64,
    /// Largest |E − E₀| seen along the trajectory, J.
    pub max_energy_deviation: f64,
    pub scattering_events: u64,
}

impl TrajectoryRecord {
    pub fn survived(&self) -> bool {
        matches!(self.fate, Fate::Alive)
    }
}

/// Velocity-Verlet integration for `steps` steps. `observer` sees the step
/// index, the state and its potential energy at step 0 and after every
/// completed step while the atom is alive.
#[allow(clippy::too_many_arguments)]
pub fn integrate_trajectory(
    atom: AtomState,
    pot: &PotentialGrid,
    integrator: &Integrator,
    steps: usize,
    loss: &LossModel,
    heating: Option<&RecoilHeating>,
    rng: &mut ChaCha8Rng,
    mut observer: impl FnMut(usize, &AtomState, f64),
) -> Result<TrajectoryRecord, DynamicsError> {
    integrator.check()?;
    loss.validate()?;
    let Integrator {
        dt, mass, interpolation, ..
    } = *integrator;
    let heating = heating.filter(|_| loss.heating_enabled());
    let (mut u, mut grad) = pot.sample(&atom.position, interpolation).ok_or(DynamicsError::OutsideGrid)?;
    let mut state = AtomState {
        energy_cache: kinetic_energy(&atom.velocity, mass) + u,
        ..atom
    };
    let initial_energy = state.energy_cache;
    let p_loss = -(-loss.loss_rate() * dt).exp_m1();
    let mut max_dev: f64 = 0.0;
    let mut events = 0u64;
    let mut fate = Fate::Alive;
    let mut taken = 0;
    if state.alive {
        observer(0, &state, u);
    }

    for step in 1..=steps {
        if !state.alive {
            break;
        }
        let t = step as f64 * dt;
        let acc = -grad / mass;
        state.position += state.velocity * dt + 0.5 * acc * dt * dt;
        let Some((u_new, g_new)) = pot.sample(&state.position, interpolation) else {
            state.alive = false;
            fate = Fate::Escaped { time: t };
            taken = step;
            break;
        };
        state.velocity += 0.5 * (acc - g_new / mass) * dt;
        u = u_new;
        grad = g_new;

        if let Some(h) = heating {
            let mean = h.rate(u) * dt;
            if mean > 0.0 {
                let n = Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0);
                for _ in 0..n {
                    let dir: [f64; 3] = UnitSphere.sample(rng);
                    state.velocity += Vec3::from(dir) * h.kick_speed;
                }
                events += n;
            }
        }

        state.energy_cache = kinetic_energy(&state.velocity, mass) + u;
        max_dev = max_dev.max((state.energy_cache - initial_energy).abs());
        taken = step;
        if p_loss > 0.0 && rng.random::<f64>() < p_loss {
            state.alive = false;
            fate = Fate::Lost { time: t };
            break;
        }
        observer(step, &state, u);
    }

    Ok(TrajectoryRecord {
        final_state: state,
        fate,
        steps_taken: taken,
        initial_energy,
        max_energy_deviation: max_dev,
        scattering_events: events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Geometry, VolumeSpec};
    use crate::rng::{stream, Family};

    fn harmonic(k: f64) -> PotentialGrid {
        let g = Geometry::from_spec(&VolumeSpec::new([32, 32, 32], [0.1e-6; 3]));
        PotentialGrid::from_fn(g, |p| 0.5 * k * p.norm_squared())
    }

    #[test]
    fn step_limit_enforced() {
        let integ = Integrator {
            dt: 1e-3,
            mass: 1.0,
            interpolation: Interpolation::Tricubic,
            max_frequency: Some(1000.0),
        };
        assert!(matches!(integ.check(), Err(DynamicsError::TimeStep { .. })));
        assert!(Integrator::for_trap(1.0, 1000.0).check().is_ok());
    }

    #[test]
    fn oscillation_period_matches_harmonic_frequency() {
        let (k, m) = (1e-12, 2.2e-25);
        let pot = harmonic(k);
        let omega = (k / m).sqrt();
        let integ = Integrator::for_trap(m, omega);
        let atom = AtomState::new(Vec3::new(0.5e-6, 0.0, 0.0), Vec3::zeros(), m, &pot, integ.interpolation).unwrap();
        let mut crossings = Vec::new();
        let mut prev = atom.position.x;
        let steps = (4.0 * 2.0 * std::f64::consts::PI / omega / integ.dt) as usize;
        integrate_trajectory(
            atom,
            &pot,
            &integ,
            steps,
            &LossModel::none(),
            None,
            &mut stream(0, Family::Trajectory, 0),
            |i, s, _| {
                let x = s.position.x;
                if prev > 0.0 && x <= 0.0 {
                    // linear interpolation of the downward zero crossing
                    crossings.push((i as f64 - x / (x - prev)) * integ.dt);
                }
                prev = x;
            },
        )
        .unwrap();
        let period = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
        assert!((period * omega / (2.0 * std::f64::consts::PI) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn leaving_the_grid_is_escape() {
        let pot = harmonic(0.0);
        let integ = Integrator {
            dt: 1e-6,
            mass: 1.0,
            interpolation: Interpolation::Trilinear,
            max_frequency: None,
        };
        let atom = AtomState::new(Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), 1.0, &pot, integ.interpolation).unwrap();
        let rec = integrate_trajectory(
            atom,
            &pot,
            &integ,
            100,
            &LossModel::none(),
            None,
            &mut stream(0, Family::Trajectory, 0),
            |_, _, _| {},
        )
        .unwrap();
        assert!(matches!(rec.fate, Fate::Escaped { .. }));
        assert!(!rec.final_state.alive);
    }

    #[test]
    fn certain_loss_kills_on_first_step() {
        let pot = harmonic(1e-12);
        let integ = Integrator::for_trap(2.2e-25, (1e-12f64 / 2.2e-25).sqrt());
        let loss = LossModel {
            background_rate_dark: 1e12,
            ..LossModel::none()
        };
        let atom = AtomState::new(Vec3::zeros(), Vec3::zeros(), 2.2e-25, &pot, integ.interpolation).unwrap();
        let rec = integrate_trajectory(
            atom,
            &pot,
            &integ,
            10,
            &loss,
            None,
            &mut stream(0, Family::Trajectory, 0),
            |_, _, _| {},
        )
        .unwrap();
        assert_eq!(rec.fate, Fate::Lost { time: integ.dt });
    }
}
