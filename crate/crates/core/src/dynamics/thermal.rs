use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{kinetic_energy, AtomState, DynamicsError};
use crate::constants::K_B;
use crate::grid::Vec3;
use crate::rng::{stream, Family};
use crate::trap::{Interpolation, PotentialGrid};

const MAX_REJECTIONS: usize = 1_000_000;

/// Where initial positions are drawn from.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    /// Uniform in an axis-aligned box.
    Box { min: Vec3, max: Vec3 },
    /// Independent Gaussian per axis.
    Gaussian { center: Vec3, sigma: Vec3 },
    /// Uniform over the listed grid cells (each a pitch-sized box around its node).
    Cells { pot: &'a PotentialGrid, cells: &'a [usize] },
    /// The listed cells weighted by `exp(−U/kT)`: a thermalised trapped cloud.
    Boltzmann { pot: &'a PotentialGrid, cells: &'a [usize] },
}

impl Region<'_> {
    fn is_empty(&self) -> bool {
        match self {
            Region::Box { min, max } => min.iter().zip(max.iter()).any(|(a, b)| !(b > a)),
            Region::Gaussian { sigma, .. } => sigma.iter().any(|s| !(*s >= 0.0)),
            Region::Cells { cells, .. } | Region::Boltzmann { cells, .. } => cells.is_empty(),
        }
    }

    fn potential(&self) -> Option<&PotentialGrid> {
        match self {
            Region::Cells { pot, .. } | Region::Boltzmann { pot, .. } => Some(pot),
            _ => None,
        }
    }
}

pub(super) fn in_cell(pot: &PotentialGrid, cell: usize, rng: &mut ChaCha8Rng) -> Vec3 {
    let g = &pot.geometry;
    let node = g.position(g.unindex(cell));
    let lo = Vec3::from(g.origin);
    let hi = g.max_corner();
    Vec3::from_fn(|a, _| {
        let half = 0.5 * g.pitches[a];
        (node[a] + rng.random_range(-half..half)).clamp(lo[a], hi[a])
    })
}

fn draw_position(region: &Region, kt: f64, rng: &mut ChaCha8Rng) -> Result<Vec3, DynamicsError> {
    Ok(match *region {
        Region::Box { min, max } => Vec3::from_fn(|a, _| rng.random_range(min[a]..max[a])),
        Region::Gaussian { center, sigma } => Vec3::from_fn(|a, _| {
            let n: f64 = rng.sample(rand_distr::StandardNormal);
            center[a] + sigma[a] * n
        }),
        Region::Cells { pot, cells } => in_cell(pot, cells[rng.random_range(0..cells.len())], rng),
        Region::Boltzmann { pot, cells } => {
            let floor = cells.iter().map(|&c| pot.values[c]).fold(f64::INFINITY, f64::min);
            for _ in 0..MAX_REJECTIONS {
                let p = in_cell(pot, cells[rng.random_range(0..cells.len())], rng);
                let u = pot.value(&p, Interpolation::default()).unwrap_or(f64::INFINITY);
                if rng.random::<f64>() < (-(u - floor) / kt).exp() {
                    return Ok(p);
                }
            }
            return Err(DynamicsError::EmptyRegion);
        }
    })
}

/// `n` atoms with Maxwell-Boltzmann velocities at `temperature` (K) and
/// positions drawn from `region`. Atom `i` uses stream `i` of the thermal
/// family, so the ensemble is reproducible and prefix-stable in `n`.
pub fn sample_thermal(n: usize, temperature: f64, mass: f64, region: &Region, seed: u64) -> Result<Vec<AtomState>, DynamicsError> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(DynamicsError::InvalidTemperature(temperature));
    }
    if region.is_empty() {
        return Err(DynamicsError::EmptyRegion);
    }
    let kt = K_B * temperature;
    let speed = Normal::new(0.0, (kt / mass).sqrt()).map_err(|e| DynamicsError::InvalidParameter(e.to_string()))?;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, Family::Thermal, i as u64);
            let position = draw_position(region, kt, &mut rng)?;
            let velocity = Vec3::from_fn(|_, _| speed.sample(&mut rng));
            let u = region
                .potential()
                .and_then(|p| p.value(&position, Interpolation::default()))
                .unwrap_or(0.0);
            Ok(AtomState {
                position,
                velocity,
                alive: true,
                energy_cache: kinetic_energy(&velocity, mass) + u,
            })
        })
        .collect()
}
