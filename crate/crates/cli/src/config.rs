//! Run configuration: a TOML file deep-merged over a named preset.
//!
//! Every dimensioned key carries its unit as a suffix (`waist_m`, `power_W`,
//! `temperature_uK`, `hold_times_s`, `bias_field_T`, `rabi_frequency_Hz`,
//! `mot_density_per_m3`, `background_rate_dark_per_s`, `half_angle_rad`).
//! A key that matches a known field apart from its suffix is a unit error;
//! any other unrecognised key is rejected outright.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use bbt_core::coherence::{DephasingModel, NoiseModel, ScanParams};
use bbt_core::dynamics::{CounterModel, LoadingParams, LossModel, RetentionMode, RetentionParams};
use bbt_core::optics::{BeamSpec, Polarization};
use bbt_core::trap::{AtomSpecies, CalibrationSpec};
use bbt_core::{Vec3, VolumeSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use toml::{Table, Value};

pub const SCHEMA_VERSION: u32 = 1;

const PAPER_MATCHED: &str = include_str!("../presets/paper-matched.toml");
const OVERLAYS: [(&str, &str); 3] = [
    ("bright", include_str!("../presets/bright.toml")),
    ("ideal", include_str!("../presets/ideal.toml")),
    ("smoke", include_str!("../presets/smoke.toml")),
];

pub const PRESETS: [&str; 4] = ["paper-matched", "bright", "ideal", "smoke"];

/// Unit suffixes recognised when diagnosing a key, including common
/// alternatives the schema does not accept. Compound suffixes come first.
const UNIT_SUFFIXES: [&str; 22] = [
    "_per_m3", "_per_cm3", "_per_s", "_rad", "_deg", "_uK", "_mK", "_K", "_kHz", "_MHz", "_Hz", "_nm", "_um", "_mm", "_m", "_mW", "_W",
    "_ms", "_us", "_s", "_uT", "_T",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config is not valid TOML: {0}")]
    Syntax(String),
    #[error("schema version {found} is not supported (this build reads version {SCHEMA_VERSION})")]
    Schema { found: i64 },
    #[error("unknown preset '{0}' (available: paper-matched, bright, ideal, smoke)")]
    UnknownPreset(String),
    #[error("unit mismatch in '{field}': expected the key '{expected}'")]
    UnitMismatch { field: String, expected: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("invalid value for '{field}': {message}")]
    Invalid { field: String, message: String },
    #[error("species '{0}' is neither built in nor a readable species file")]
    Species(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub wavelength_m: f64,
    pub waist_m: f64,
    #[serde(rename = "power_W")]
    pub power_w: f64,
    pub charge: i32,
    pub half_angle_rad: f64,
    pub polarization: Polarization,
    pub focus_offset_m: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeConfig {
    pub dims: [usize; 3],
    pub pitch_m: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldmapConfig {
    pub xy_plane_z_m: f64,
    pub xz_plane_y_m: f64,
    pub yz_plane_x_m: f64,
    /// Also write the full intensity volume as `intensity.ivol`.
    pub write_volume: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    pub target_transverse_m: f64,
    pub tolerance: f64,
    pub w0_min_m: f64,
    pub w0_max_m: f64,
    pub w0_step_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    pub background_rate_dark_per_s: f64,
    pub bright_excess_factor: f64,
    pub readout_on: bool,
    pub recoil_heating_on: bool,
    pub heating_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterConfig {
    pub atom_count_rate_per_s: f64,
    pub background_count_rate_per_s: f64,
    pub integration_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadingConfig {
    pub cycles: usize,
    pub mot_density_per_m3: f64,
    #[serde(rename = "temperature_uK")]
    pub temperature_uk: f64,
    pub blockade_p1: f64,
    pub normalization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetentionConfig {
    pub n_atoms: usize,
    pub hold_times_s: Vec<f64>,
    #[serde(rename = "temperature_uK")]
    pub temperature_uk: f64,
    pub mode: RetentionMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    QuasiStatic,
    Ou,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephasingConfig {
    pub eta_differential: f64,
    #[serde(rename = "bias_field_T")]
    pub bias_field_t: f64,
    #[serde(rename = "field_noise_rms_T")]
    pub field_noise_rms_t: f64,
    pub noise_model: NoiseKind,
    /// Used by the `ou` noise model only.
    pub correlation_time_s: f64,
    pub raman_contrast_c0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    pub td_values_s: Vec<f64>,
    pub n_atoms: usize,
    #[serde(rename = "temperature_uK")]
    pub temperature_uk: f64,
    /// Cyclic Rabi frequency Ω/2π.
    #[serde(rename = "rabi_frequency_Hz")]
    pub rabi_frequency_hz: f64,
    pub phase_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiConfig {
    pub durations_s: Vec<f64>,
    /// Cyclic detuning δ/2π.
    #[serde(rename = "detuning_Hz")]
    pub detuning_hz: f64,
    pub shots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub schema_version: u32,
    pub preset: String,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// `cs133` or the path of a species TOML file.
    pub species: String,
    pub beam_a: BeamConfig,
    pub beam_b: BeamConfig,
    pub volume: VolumeConfig,
    pub fieldmap: FieldmapConfig,
    pub calibration: CalibrationConfig,
    pub loss: LossConfig,
    pub counter: CounterConfig,
    pub loading: LoadingConfig,
    pub retention: RetentionConfig,
    pub dephasing: DephasingConfig,
    pub sequence: SequenceConfig,
    pub rabi: RabiConfig,
}

fn parse_table(text: &str) -> Result<Table, ConfigError> {
    text.parse::<Table>().map_err(|e| ConfigError::Syntax(e.to_string()))
}

/// Overlay `top` onto `base`, recursing into tables and replacing leaves.
fn deep_merge(base: &mut Table, top: Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(t)) => deep_merge(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Full key table of a preset.
pub fn preset_table(name: &str) -> Result<Table, ConfigError> {
    let mut base = parse_table(PAPER_MATCHED)?;
    if name == "paper-matched" {
        return Ok(base);
    }
    let (_, overlay) = OVERLAYS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| ConfigError::UnknownPreset(name.to_owned()))?;
    deep_merge(&mut base, parse_table(overlay)?);
    Ok(base)
}

fn unit_stem(key: &str) -> &str {
    UNIT_SUFFIXES.iter().find_map(|s| key.strip_suffix(s)).unwrap_or(key)
}

/// Reject keys absent from the schema, naming the expected key when only the
/// unit suffix is wrong or missing.
fn check_keys(user: &Table, schema: &Table, prefix: &str) -> Result<(), ConfigError> {
    for (key, value) in user {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match schema.get(key) {
            Some(Value::Table(inner)) => {
                if let Value::Table(u) = value {
                    check_keys(u, inner, &path)?;
                }
            }
            Some(_) => {}
            None => {
                let stem = unit_stem(key);
                let expected = schema.keys().find(|k| unit_stem(k) == stem);
                return Err(match expected {
                    Some(k) => ConfigError::UnitMismatch {
                        field: path,
                        expected: if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") },
                    },
                    None => ConfigError::UnknownKey(path),
                });
            }
        }
    }
    Ok(())
}

impl SimConfig {
    /// Parse config text over the preset it names (or `preset_override`).
    pub fn from_toml_str(text: &str, preset_override: Option<&str>) -> Result<Self, ConfigError> {
        let user = parse_table(text)?;
        if let Some(v) = user.get("schema_version") {
            let found = v.as_integer().unwrap_or(-1);
            if found != SCHEMA_VERSION as i64 {
                return Err(ConfigError::Schema { found });
            }
        }
        let name = match (preset_override, user.get("preset")) {
            (Some(p), _) => p.to_owned(),
            (None, Some(Value::String(p))) => p.clone(),
            (None, Some(_)) => {
                return Err(ConfigError::Invalid {
                    field: "preset".into(),
                    message: "must be a string".into(),
                })
            }
            (None, None) => "paper-matched".to_owned(),
        };
        let mut merged = preset_table(&name)?;
        check_keys(&user, &merged, "")?;
        deep_merge(&mut merged, user);
        merged.insert("preset".into(), Value::String(name));
        let cfg: SimConfig = merged.try_into().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_preset(name: &str) -> Result<Self, ConfigError> {
        Self::from_toml_str("", Some(name))
    }

    pub fn from_path(path: &Path, preset_override: Option<&str>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml_str(&text, preset_override)
    }

    /// Fully expanded TOML; parsing it yields an identical config.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn content_hash(&self) -> String {
        sha256_hex(self.to_toml_string().as_bytes())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field: &str, message: String| ConfigError::Invalid {
            field: field.to_owned(),
            message,
        };
        for (name, beam) in [("beam_a", self.beam_a()), ("beam_b", self.beam_b())] {
            beam.validate().map_err(|e| invalid(name, e.to_string()))?;
        }
        if self.beam_a.wavelength_m != self.beam_b.wavelength_m {
            return Err(invalid("beam_b.wavelength_m", "both beams must share one wavelength".into()));
        }
        if self.volume.dims.iter().any(|&n| n < 4) || self.volume.pitch_m.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(invalid("volume", "needs at least 4 nodes per axis and positive pitches".into()));
        }
        self.species().map(|_| ())?;
        self.loss_model().validate().map_err(|e| invalid("loss", e.to_string()))?;
        self.counter_model().validate().map_err(|e| invalid("counter", e.to_string()))?;
        self.loading_params().validate().map_err(|e| invalid("loading", e.to_string()))?;
        if self.loading.cycles == 0 {
            return Err(invalid("loading.cycles", "must be at least 1".into()));
        }
        if self.retention.n_atoms == 0 || self.retention.hold_times_s.is_empty() {
            return Err(invalid("retention", "needs atoms and at least one hold time".into()));
        }
        let dephasing = self.dephasing_model();
        dephasing.validate().map_err(|e| invalid("dephasing", e.to_string()))?;
        dephasing
            .pulse_area_jitter()
            .map_err(|e| invalid("dephasing.raman_contrast_c0", e.to_string()))?;
        self.scan_params().validate().map_err(|e| invalid("sequence", e.to_string()))?;
        if self.sequence.rabi_frequency_hz.is_nan() || self.sequence.rabi_frequency_hz <= 0.0 {
            return Err(invalid("sequence.rabi_frequency_Hz", "must be positive".into()));
        }
        if self.rabi.shots < 2 {
            return Err(invalid("rabi.shots", "must be at least 2".into()));
        }
        Ok(())
    }

    fn beam(b: &BeamConfig) -> BeamSpec {
        BeamSpec {
            wavelength: b.wavelength_m,
            waist_w0: b.waist_m,
            power: b.power_w,
            charge_l: b.charge,
            half_angle_theta: b.half_angle_rad,
            polarization_tag: b.polarization,
            focus_offset: Vec3::from(b.focus_offset_m),
        }
    }

    pub fn beam_a(&self) -> BeamSpec {
        Self::beam(&self.beam_a)
    }

    pub fn beam_b(&self) -> BeamSpec {
        Self::beam(&self.beam_b)
    }

    pub fn wavelength(&self) -> f64 {
        self.beam_a.wavelength_m
    }

    pub fn volume_spec(&self) -> VolumeSpec {
        VolumeSpec::new(self.volume.dims, self.volume.pitch_m)
    }

    pub fn species(&self) -> Result<AtomSpecies, ConfigError> {
        if self.species == "cs133" {
            return Ok(AtomSpecies::cesium());
        }
        let text = std::fs::read_to_string(&self.species).map_err(|_| ConfigError::Species(self.species.clone()))?;
        AtomSpecies::from_toml(&text).map_err(|_| ConfigError::Species(self.species.clone()))
    }

    pub fn calibration_spec(&self) -> CalibrationSpec {
        let c = &self.calibration;
        CalibrationSpec {
            target_transverse: c.target_transverse_m,
            tolerance: c.tolerance,
            w0_min: c.w0_min_m,
            w0_max: c.w0_max_m,
            w0_step: c.w0_step_m,
        }
    }

    pub fn loss_model(&self) -> LossModel {
        let l = &self.loss;
        LossModel {
            background_rate_dark: l.background_rate_dark_per_s,
            bright_excess_factor: l.bright_excess_factor,
            readout_on: l.readout_on,
            recoil_heating_on: l.recoil_heating_on,
            heating_multiplier: l.heating_multiplier,
        }
    }

    pub fn counter_model(&self) -> CounterModel {
        let c = &self.counter;
        CounterModel {
            atom_count_rate: c.atom_count_rate_per_s,
            background_count_rate: c.background_count_rate_per_s,
            integration_time: c.integration_time_s,
        }
    }

    pub fn loading_params(&self) -> LoadingParams {
        let l = &self.loading;
        LoadingParams {
            mot_density: l.mot_density_per_m3,
            temperature: l.temperature_uk * 1e-6,
            blockade_p1: l.blockade_p1,
            normalization: l.normalization,
        }
    }

    pub fn retention_params(&self) -> RetentionParams {
        let r = &self.retention;
        RetentionParams {
            n_atoms: r.n_atoms,
            hold_times: r.hold_times_s.clone(),
            temperature: r.temperature_uk * 1e-6,
            mode: r.mode,
        }
    }

    pub fn dephasing_model(&self) -> DephasingModel {
        let d = &self.dephasing;
        DephasingModel {
            eta_differential: d.eta_differential,
            bias_field: d.bias_field_t,
            field_noise_rms: d.field_noise_rms_t,
            noise_model: match d.noise_model {
                NoiseKind::QuasiStatic => NoiseModel::QuasiStaticGaussian,
                NoiseKind::Ou => NoiseModel::OuProcess {
                    correlation_time: d.correlation_time_s,
                },
            },
            raman_contrast_c0: d.raman_contrast_c0,
        }
    }

    pub fn scan_params(&self) -> ScanParams {
        let s = &self.sequence;
        ScanParams {
            td_values: s.td_values_s.clone(),
            n_atoms: s.n_atoms,
            temperature: s.temperature_uk * 1e-6,
            rabi_frequency: 2.0 * PI * s.rabi_frequency_hz,
            phase_steps: s.phase_steps,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
