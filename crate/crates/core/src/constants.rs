//! CODATA 2018 constants in SI units.

pub const C: f64 = 299_792_458.0;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const K_B: f64 = 1.380_649e-23;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Atomic unit of polarizability, 4πε0·a0³, in C·m²/V.
pub const POLARIZABILITY_AU: f64 = 1.648_777_274_36e-41;

/// Joules per kB·μK.
pub const J_PER_UK: f64 = K_B * 1e-6;

pub fn joule_to_uk(e: f64) -> f64 {
    e / J_PER_UK
}

pub fn uk_to_joule(t: f64) -> f64 {
    t * J_PER_UK
}
