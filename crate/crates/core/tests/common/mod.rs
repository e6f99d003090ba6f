use std::f64::consts::PI;

use bbt_core::constants::J_PER_UK;
use bbt_core::grid::Geometry;
use bbt_core::trap::{analyze_trap, AtomSpecies, PotentialGrid, TrapReport};
use bbt_core::{Vec3, VolumeSpec};

pub const OMEGA: f64 = 2.0 * PI * 1e3;
pub const CAP_UK: f64 = 200.0;

/// Isotropic harmonic well at 1 kHz, flat above 200 µK, carrying the Cs
/// light-shift scale at 532 nm.
pub fn capped_harmonic() -> (PotentialGrid, TrapReport, f64) {
    let sp = AtomSpecies::cesium();
    let vs = VolumeSpec::new([32, 32, 32], [2e-6, 2e-6, 2e-6]);
    let k = sp.mass * OMEGA * OMEGA;
    let cap = CAP_UK * J_PER_UK;
    let mut pot = PotentialGrid::from_fn(Geometry::from_spec(&vs), |p| (0.5 * k * p.norm_squared()).min(cap));
    pot.intensity_to_energy = sp.intensity_to_energy(532e-9).unwrap();
    let report = analyze_trap(&pot, sp.mass, &Vec3::zeros()).unwrap();
    (pot, report, sp.mass)
}
