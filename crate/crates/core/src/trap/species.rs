use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::TrapError;
use crate::constants::{C, EPSILON_0, HBAR, POLARIZABILITY_AU};

pub const SPECIES_SCHEMA_VERSION: u32 = 1;

/// Built-in Cs-133 data file.
pub const CS133_TOML: &str = include_str!("../../data/cs133.toml");

/// Lines closer than this to the trap light frequency are rejected.
pub const RESONANCE_GUARD_HZ: f64 = 10e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub label: String,
    #[serde(rename = "wavelength_m")]
    pub transition_wavelength: f64,
    /// Partial decay rate of the upper level to the ground state, rad/s.
    #[serde(rename = "linewidth_rad_per_s")]
    pub linewidth_gamma: f64,
    /// (2J'+1)/(2J+1).
    pub degeneracy_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpecies {
    pub schema_version: u32,
    pub name: String,
    #[serde(rename = "mass_kg")]
    pub mass: f64,
    pub lines: Vec<Line>,
    #[serde(rename = "hyperfine_splitting_Hz")]
    pub hyperfine_splitting: f64,
    #[serde(rename = "quadratic_zeeman_coeff_Hz_per_T2")]
    pub quadratic_zeeman_coeff: f64,
    pub excited_fraction_bright: f64,
    /// Scalar ground-state polarizability in atomic units; bypasses the line
    /// sum when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarizability_override_au: Option<f64>,
}

impl AtomSpecies {
    pub fn cesium() -> Self {
        Self::from_toml(CS133_TOML).expect("built-in species file")
    }

    pub fn from_toml(text: &str) -> Result<Self, TrapError> {
        let s: AtomSpecies = toml::from_str(text).map_err(|e| TrapError::Species(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), TrapError> {
        let bad = |m: String| Err(TrapError::Species(m));
        if self.schema_version != SPECIES_SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} not supported (expected {SPECIES_SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if !(self.mass > 0.0) {
            return bad("mass must be positive".into());
        }
        if !(self.hyperfine_splitting > 0.0) {
            return bad("hyperfine splitting must be positive".into());
        }
        for l in &self.lines {
            if !(l.linewidth_gamma > 0.0 && l.transition_wavelength > 0.0 && l.degeneracy_weight > 0.0) {
                return bad(format!("line '{}' needs positive wavelength, width and weight", l.label));
            }
        }
        if self.lines.is_empty() && self.polarizability_override_au.is_none() {
            return bad("no lines and no polarizability override".into());
        }
        Ok(())
    }

    fn check_resonance(&self, wavelength: f64) -> Result<(), TrapError> {
        let nu = C / wavelength;
        for l in &self.lines {
            let nu_l = C / l.transition_wavelength;
            if (nu - nu_l).abs() < RESONANCE_GUARD_HZ {
                return Err(TrapError::NearResonance {
                    line: l.label.clone(),
                    detuning_hz: nu - nu_l,
                });
            }
        }
        Ok(())
    }

    /// Scalar dynamic polarizability (SI, C·m²/V) from the sum over lines,
    /// counter-rotating terms included:
    /// `α = Σ π ε0 c³ g Γ / ω_i³ · (1/(ω_i − ω) + 1/(ω_i + ω))`.
    pub fn polarizability(&self, wavelength: f64) -> Result<f64, TrapError> {
        if !(wavelength > 0.0) {
            return Err(TrapError::Species("trap wavelength must be positive".into()));
        }
        if let Some(au) = self.polarizability_override_au {
            return Ok(au * POLARIZABILITY_AU);
        }
        self.check_resonance(wavelength)?;
        let w = 2.0 * PI * C / wavelength;
        Ok(self
            .lines
            .iter()
            .map(|l| {
                let wi = 2.0 * PI * C / l.transition_wavelength;
                PI * EPSILON_0 * C.powi(3) * l.degeneracy_weight * l.linewidth_gamma / wi.powi(3) * (1.0 / (wi - w) + 1.0 / (wi + w))
            })
            .sum())
    }

    pub fn polarizability_au(&self, wavelength: f64) -> Result<f64, TrapError> {
        Ok(self.polarizability(wavelength)? / POLARIZABILITY_AU)
    }

    /// Light shift per unit intensity, J per W/m²: `U = −α I / (2 ε0 c)`.
    pub fn intensity_to_energy(&self, wavelength: f64) -> Result<f64, TrapError> {
        Ok(-self.polarizability(wavelength)? / (2.0 * EPSILON_0 * C))
    }

    /// Photon scattering rate per unit intensity, 1/s per W/m², from the
    /// Rayleigh cross-section of the same polarizability,
    /// `σ = k⁴ α² / (6π ε0²)`, divided by the photon energy.
    pub fn scattering_per_intensity(&self, wavelength: f64) -> Result<f64, TrapError> {
        let alpha = self.polarizability(wavelength)?;
        let k = 2.0 * PI / wavelength;
        let sigma = k.powi(4) * alpha * alpha / (6.0 * PI * EPSILON_0 * EPSILON_0);
        let photon = HBAR * 2.0 * PI * C / wavelength;
        Ok(sigma / photon)
    }

    /// Single-photon recoil energy ħ²k²/2m.
    pub fn recoil_energy(&self, wavelength: f64) -> f64 {
        let k = 2.0 * PI / wavelength;
        (HBAR * k).powi(2) / (2.0 * self.mass)
    }
}

/// Total photon scattering rate at `intensity` (W/m²).
pub fn scattering_rate(intensity: f64, species: &AtomSpecies, wavelength: f64) -> Result<f64, TrapError> {
    if !(intensity >= 0.0) {
        return Err(TrapError::Species("intensity must be non-negative".into()));
    }
    Ok(species.scattering_per_intensity(wavelength)? * intensity)
}
