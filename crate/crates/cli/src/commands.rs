//! Subcommand pipelines. Each one writes its data files through an
//! [`ArtifactWriter`] and the run is summarised in a [`RunManifest`].

use std::fmt::Write as _;
use std::path::Path;

use bbt_core::coherence::{echo_scan, rabi_curve, ramsey_scan, ContrastCurve};
use bbt_core::constants::J_PER_UK;
use bbt_core::dynamics::{run_loading, simulate_count_histogram, simulate_retention, LoadingTrap, RecoilHeating};
use bbt_core::optics::{crossed_bbt_intensity, slice_extract, IntensityVolume, Plane};
use bbt_core::trap::{analyze_trap, calibrate_waist, potential_from_intensity, AtomSpecies, PotentialGrid, TrapReport};
use bbt_core::Vec3;
use serde::{Deserialize, Serialize};

use crate::config::{sha256_hex, SimConfig};
use crate::error::{io_context, CliError, ModelContext};
use crate::manifest::{InputFile, RunManifest};
use crate::output::{ArtifactWriter, Plot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Crossed-beam intensity slices through the trap centre and the full volume.
    Fieldmap,
    /// Trap minimum, escape barrier, sub-barrier sizes and frequencies.
    Trapreport,
    /// Single-atom loading cycles and the photon-count histogram.
    LoadHist,
    /// Survival versus hold time with an exponential lifetime fit.
    Retention,
    /// Transfer probability versus pulse length.
    Rabi,
    /// Ramsey contrast versus delay with a T2 fit.
    Ramsey,
    /// Spin-echo contrast versus delay with a T2 fit.
    Echo,
    /// Common beam waist giving the target transverse trap size.
    CalibrateWaist,
}

impl Command {
    pub fn uses_volume(self) -> bool {
        !matches!(self, Command::Rabi | Command::CalibrateWaist)
    }
}

pub struct RunRequest<'a> {
    pub command: Command,
    pub config: &'a SimConfig,
    pub out_dir: &'a Path,
    /// Intensity volume to use instead of synthesising one.
    pub ivol: Option<&'a Path>,
    pub threads: Option<usize>,
}

/// Run one subcommand, write its artifacts and manifest into `out_dir`.
/// The manifest is written even when a fit fails, listing the data files
/// produced before the failure.
pub fn run(req: &RunRequest) -> Result<RunManifest, CliError> {
    if req.ivol.is_some() && !req.command.uses_volume() {
        return Err(CliError::Usage(format!("--ivol does not apply to {:?}", req.command)));
    }
    let started = timestamp();
    let input = req.ivol.map(read_volume).transpose()?;
    let mut out = ArtifactWriter::new(req.out_dir)?;
    let outcome = match req.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Usage(format!("--threads {n}: {e}")))?
            .install(|| dispatch(req, input.as_ref().map(|i| &i.1), &mut out)),
        None => dispatch(req, input.as_ref().map(|i| &i.1), &mut out),
    };
    let manifest = RunManifest {
        tool: "bbt".to_owned(),
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        subcommand: req.command,
        seed: req.config.seed,
        threads: req.threads,
        config_sha256: req.config.content_hash(),
        config_toml: req.config.to_toml_string(),
        input_volume: input.map(|i| i.0),
        started,
        finished: timestamp(),
        artifacts: out.into_artifacts(),
    };
    if outcome.is_ok() || matches!(&outcome, Err(e) if e.exit_code() == 4) {
        manifest.write(req.out_dir)?;
    }
    outcome.map(|_| manifest)
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn read_volume(path: &Path) -> Result<(InputFile, IntensityVolume), CliError> {
    let bytes = std::fs::read(path).map_err(io_context(format!("reading {}", path.display())))?;
    let vol = IntensityVolume::read_ivol(&bytes[..]).context(&format!("reading {}", path.display()))?;
    let file = InputFile {
        path: path.to_owned(),
        sha256: sha256_hex(&bytes),
    };
    Ok((file, vol))
}

fn dispatch(req: &RunRequest, input: Option<&IntensityVolume>, out: &mut ArtifactWriter) -> Result<(), CliError> {
    let cfg = req.config;
    match req.command {
        Command::Rabi => return rabi(cfg, out),
        Command::CalibrateWaist => return calibrate(cfg, out),
        _ => {}
    }
    let built;
    let vol = match input {
        Some(v) => v,
        None => {
            built = crossed_bbt_intensity(&cfg.beam_a(), &cfg.beam_b(), &cfg.volume_spec())
                .context("synthesising the crossed-beam intensity")?;
            &built
        }
    };
    if req.command == Command::Fieldmap {
        return fieldmap(cfg, vol, out);
    }
    let trap = Trap::build(cfg, vol)?;
    match req.command {
        Command::Trapreport => out.write_json("trapreport.json", &TrapReportJson::new(cfg, &trap.report)),
        Command::LoadHist => load_hist(cfg, &trap, out),
        Command::Retention => retention(cfg, &trap, out),
        Command::Ramsey | Command::Echo => contrast(req.command, cfg, &trap, out),
        Command::Fieldmap | Command::Rabi | Command::CalibrateWaist => unreachable!(),
    }
}

pub struct Trap {
    pub species: AtomSpecies,
    pub pot: PotentialGrid,
    pub report: TrapReport,
}

impl Trap {
    pub fn build(cfg: &SimConfig, vol: &IntensityVolume) -> Result<Self, CliError> {
        let species = cfg.species()?;
        let pot = potential_from_intensity(vol, &species, cfg.wavelength()).context("computing the trap potential")?;
        let report = analyze_trap(&pot, species.mass, &Vec3::zeros()).context("analysing the trap")?;
        Ok(Self { species, pot, report })
    }
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = format!("# {header}\n");
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

fn fieldmap(cfg: &SimConfig, vol: &IntensityVolume, out: &mut ArtifactWriter) -> Result<(), CliError> {
    let f = &cfg.fieldmap;
    for (plane, coordinate) in [
        (Plane::Xy, f.xy_plane_z_m),
        (Plane::Xz, f.xz_plane_y_m),
        (Plane::Yz, f.yz_plane_x_m),
    ] {
        let slice = slice_extract(vol, plane, coordinate).context("extracting a slice")?;
        let [u, v] = plane.axis_names();
        let name = format!("slice_{}.csv", u.to_owned() + v);
        out.write_csv(
            &name,
            &slice.to_csv("intensity_W_m2"),
            Plot::Map {
                u_label: &format!("{u} (µm)"),
                v_label: &format!("{v} (µm)"),
                value_label: "intensity (W/m²)",
            },
        )?;
    }
    if f.write_volume {
        let mut bytes = Vec::new();
        vol.write_ivol(&mut bytes).context("encoding the volume")?;
        out.write("intensity.ivol", &bytes)?;
    }
    #[derive(Serialize)]
    struct Summary {
        dims: [usize; 3],
        pitch_m: [f64; 3],
        origin_m: [f64; 3],
        #[serde(rename = "peak_intensity_W_m2")]
        peak_intensity: f64,
        #[serde(rename = "total_power_W")]
        total_power: f64,
    }
    out.write_json(
        "fieldmap.json",
        &Summary {
            dims: vol.geometry.dims,
            pitch_m: vol.geometry.pitches,
            origin_m: vol.geometry.origin,
            peak_intensity: vol.max(),
            total_power: cfg.beam_a.power_w + cfg.beam_b.power_w,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourMeta {
    pub level: String,
    pub method: String,
}

/// `trapreport.json`. Frequencies are cyclic, `null` for anharmonic axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapReportJson {
    #[serde(rename = "barrier_energy_uK")]
    pub barrier_energy_uk: f64,
    #[serde(rename = "minimum_energy_uK")]
    pub minimum_energy_uk: f64,
    #[serde(rename = "barrier_height_uK")]
    pub barrier_height_uk: f64,
    #[serde(rename = "barrier_resolution_uK")]
    pub barrier_resolution_uk: f64,
    pub enclosed: bool,
    pub minimum_position_m: [f64; 3],
    pub saddle_position_m: [f64; 3],
    #[serde(rename = "trap_frequencies_Hz")]
    pub trap_frequencies_hz: [Option<f64>; 3],
    pub size_transverse_m: f64,
    pub size_axial_m: f64,
    pub size_xyz_m: [f64; 3],
    pub region_extent_m: [f64; 3],
    pub region_cells: usize,
    pub contour: ContourMeta,
    #[serde(rename = "total_power_W")]
    pub total_power_w: f64,
    pub waist_m: [f64; 2],
    pub half_angle_rad: [f64; 2],
}

impl TrapReportJson {
    pub fn new(cfg: &SimConfig, r: &TrapReport) -> Self {
        let to3 = |v: &Vec3| [v.x, v.y, v.z];
        Self {
            barrier_energy_uk: r.barrier_energy / J_PER_UK,
            minimum_energy_uk: r.minimum_energy / J_PER_UK,
            barrier_height_uk: r.barrier_height() / J_PER_UK,
            barrier_resolution_uk: r.barrier_resolution / J_PER_UK,
            enclosed: r.enclosed,
            minimum_position_m: to3(&r.minimum_position),
            saddle_position_m: to3(&r.saddle_position),
            trap_frequencies_hz: r.axis_fits.map(|f| f.omega().map(|w| w / (2.0 * std::f64::consts::PI))),
            size_transverse_m: r.size_transverse,
            size_axial_m: r.size_axial,
            size_xyz_m: r.size_xyz,
            region_extent_m: r.region_extent,
            region_cells: r.region_cells,
            contour: ContourMeta {
                level: "barrier_energy".into(),
                method: "full width along the grid axes through the minimum node, linear interpolation between the last node inside and the first node outside the connected sub-barrier region".into(),
            },
            total_power_w: cfg.beam_a.power_w + cfg.beam_b.power_w,
            waist_m: [cfg.beam_a.waist_m, cfg.beam_b.waist_m],
            half_angle_rad: [cfg.beam_a.half_angle_rad, cfg.beam_b.half_angle_rad],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub cycles: usize,
    pub p1: f64,
    pub p1_stderr: f64,
    pub threshold: u64,
    pub mean_dark: f64,
    pub mean_bright: f64,
    pub separation: f64,
    pub misclassification: f64,
    pub distinguishable: bool,
    /// Cycles classified above the one/two-atom count threshold.
    pub two_atom_events: usize,
    /// Cycles where at least one atom was captured before the blockade.
    pub captured_fraction: f64,
}

fn load_hist(cfg: &SimConfig, trap: &Trap, out: &mut ArtifactWriter) -> Result<(), CliError> {
    let loading = LoadingTrap::from_report(&trap.pot, &trap.report, trap.species.mass);
    let cycles = run_loading(&cfg.loading_params(), &loading, cfg.loading.cycles, cfg.seed).context("simulating loading")?;
    let occupancy: Vec<u8> = cycles.iter().map(|c| c.occupancy).collect();
    let counter = cfg.counter_model();
    let hist = simulate_count_histogram(&occupancy, &counter, cfg.seed).context("simulating photon counts")?;
    let two_threshold = 0.5 * (counter.mean_counts(1) + counter.mean_counts(2));
    let summary = LoadSummary {
        cycles: cycles.len(),
        p1: hist.p1,
        p1_stderr: hist.p1_stderr,
        threshold: hist.threshold,
        mean_dark: hist.mean_dark,
        mean_bright: hist.mean_bright,
        separation: hist.separation,
        misclassification: hist.misclassification,
        distinguishable: hist.distinguishable,
        two_atom_events: hist.counts.iter().filter(|&&c| c as f64 >= two_threshold).count(),
        captured_fraction: cycles.iter().filter(|c| c.captured > 0).count() as f64 / cycles.len() as f64,
    };
    out.write_csv(
        "load_hist.csv",
        &csv("counts, cycles", hist.bins.iter().map(|(c, n)| format!("{c},{n}"))),
        Plot::Bars {
            x_label: "photon counts",
            y_label: "cycles",
        },
    )?;
    out.write(
        "load_cycles.csv",
        csv(
            "cycle, captured, occupancy, counts",
            cycles
                .iter()
                .zip(&hist.counts)
                .enumerate()
                .map(|(i, (c, n))| format!("{i},{},{},{n}", c.captured, c.occupancy)),
        )
        .as_bytes(),
    )?;
    out.write_json("load_summary.json", &summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitJson {
    pub amplitude: f64,
    pub amplitude_stderr: f64,
    /// `null` when no decay is resolved.
    pub tau_s: Option<f64>,
    pub tau_stderr_s: Option<f64>,
    pub reduced_chi2: f64,
}

impl From<&bbt_core::fit::ExpFit> for FitJson {
    fn from(f: &bbt_core::fit::ExpFit) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        Self {
            amplitude: f.amplitude,
            amplitude_stderr: f.amplitude_stderr,
            tau_s: finite(f.tau),
            tau_stderr_s: finite(f.tau_stderr),
            reduced_chi2: f.reduced_chi2(),
        }
    }
}

fn retention(cfg: &SimConfig, trap: &Trap, out: &mut ArtifactWriter) -> Result<(), CliError> {
    let loss = cfg.loss_model();
    let heating =
        RecoilHeating::new(&trap.species, cfg.wavelength(), &trap.pot, loss.heating_multiplier).context("setting up recoil heating")?;
    let curve = simulate_retention(
        &cfg.retention_params(),
        &trap.pot,
        &trap.report,
        &loss,
        Some(&heating),
        trap.species.mass,
        cfg.seed,
    )
    .context("simulating retention")?;
    out.write_csv(
        "retention.csv",
        &csv(
            "hold_s, survival, stderr, survivors",
            (0..curve.hold_times.len()).map(|i| {
                format!(
                    "{:e},{:e},{:e},{}",
                    curve.hold_times[i], curve.survival[i], curve.stderr[i], curve.survivors[i]
                )
            }),
        ),
        Plot::Curve {
            x_label: "hold time (s)",
            y_label: "survival",
        },
    )?;
    let fit = curve.fit().context("fitting the retention lifetime")?;
    out.write_json("retention_fit.json", &FitJson::from(&fit))
}

fn rabi(cfg: &SimConfig, out: &mut ArtifactWriter) -> Result<(), CliError> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let curve = rabi_curve(
        &cfg.rabi.durations_s,
        two_pi * cfg.sequence.rabi_frequency_hz,
        two_pi * cfg.rabi.detuning_hz,
        &cfg.dephasing_model(),
        cfg.rabi.shots,
        cfg.seed,
    )
    .context("simulating Rabi oscillation")?;
    out.write_csv(
        "rabi.csv",
        &csv(
            "duration_s, transfer, stderr",
            (0..curve.durations.len()).map(|i| format!("{:e},{:e},{:e}", curve.durations[i], curve.transfer[i], curve.stderr[i])),
        ),
        Plot::Curve {
            x_label: "pulse length (s)",
            y_label: "transfer probability",
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastFitJson {
    #[serde(flatten)]
    pub fit: FitJson,
    pub one_over_e_time_s: Option<f64>,
    #[serde(rename = "temperature_uK")]
    pub temperature_uk: f64,
    pub n_atoms: usize,
}

fn contrast(command: Command, cfg: &SimConfig, trap: &Trap, out: &mut ArtifactWriter) -> Result<(), CliError> {
    let scan = if command == Command::Echo { echo_scan } else { ramsey_scan };
    let stem = if command == Command::Echo { "echo" } else { "ramsey" };
    let curve: ContrastCurve = scan(
        &cfg.scan_params(),
        &trap.pot,
        &trap.report,
        &trap.species,
        &cfg.dephasing_model(),
        cfg.seed,
    )
    .context("simulating the contrast scan")?;
    out.write_csv(
        &format!("{stem}.csv"),
        &csv(
            "td_s, contrast, stderr",
            (0..curve.td.len()).map(|i| format!("{:e},{:e},{:e}", curve.td[i], curve.contrast[i], curve.stderr[i])),
        ),
        Plot::Curve {
            x_label: "delay (s)",
            y_label: "fringe contrast",
        },
    )?;
    let steps = cfg.sequence.phase_steps;
    let mut fringes = String::from("# td_s, phase_rad, p1\n");
    for (td, row) in curve.td.iter().zip(&curve.fringes) {
        for (k, p) in row.iter().enumerate() {
            let phase = 2.0 * std::f64::consts::PI * k as f64 / steps as f64;
            writeln!(fringes, "{td:e},{phase:e},{p:e}").expect("string write");
        }
    }
    out.write(&format!("{stem}_fringes.csv"), fringes.as_bytes())?;
    let fit = curve.fit().context("fitting the contrast decay")?;
    out.write_json(
        &format!("{stem}_fit.json"),
        &ContrastFitJson {
            fit: FitJson::from(&fit),
            one_over_e_time_s: curve.one_over_e_time(),
            temperature_uk: cfg.sequence.temperature_uk,
            n_atoms: cfg.sequence.n_atoms,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationJson {
    pub w0_m: f64,
    pub size_transverse_m: f64,
    pub size_axial_m: f64,
    pub target_transverse_m: f64,
    pub within_tolerance: bool,
    #[serde(rename = "barrier_energy_uK")]
    pub barrier_energy_uk: f64,
}

fn calibrate(cfg: &SimConfig, out: &mut ArtifactWriter) -> Result<(), CliError> {
    let species = cfg.species()?;
    let cal = calibrate_waist(&cfg.beam_a(), &cfg.beam_b(), &cfg.volume_spec(), &species, &cfg.calibration_spec())
        .context("calibrating the waist")?;
    out.write_csv(
        "calibration.csv",
        &csv("w0_m, size_transverse_m", cal.scan.iter().map(|(w, s)| format!("{w:e},{s:e}"))),
        Plot::Curve {
            x_label: "waist (m)",
            y_label: "transverse size (m)",
        },
    )?;
    out.write_json(
        "calibration.json",
        &CalibrationJson {
            w0_m: cal.w0,
            size_transverse_m: cal.report.size_transverse,
            size_axial_m: cal.report.size_axial,
            target_transverse_m: cfg.calibration.target_transverse_m,
            within_tolerance: cal.within_tolerance,
            barrier_energy_uk: cal.report.barrier_uk(),
        },
    )?;
    let mut calibrated = cfg.clone();
    calibrated.beam_a.waist_m = cal.w0;
    calibrated.beam_b.waist_m = cal.w0;
    out.write("calibrated.toml", calibrated.to_toml_string().as_bytes())
}
