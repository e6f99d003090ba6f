use serde::{Deserialize, Serialize};

use super::{analyze_trap, potential_from_intensity, AtomSpecies, TrapError, TrapReport};
use crate::grid::{Vec3, VolumeSpec};
use crate::optics::{crossed_bbt_intensity, BeamSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec {
    /// Target full transverse width at the barrier contour, m.
    pub target_transverse: f64,
    /// Accepted relative deviation from the target.
    pub tolerance: f64,
    /// Inclusive waist scan range, m.
    pub w0_min: f64,
    pub w0_max: f64,
    /// Coarse scan step before bisection, m.
    pub w0_step: f64,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        Self {
            target_transverse: 3.3e-6,
            tolerance: 0.05,
            w0_min: 1.5e-6,
            w0_max: 3.5e-6,
            w0_step: 0.25e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub w0: f64,
    pub report: TrapReport,
    /// (w0, transverse size) for every evaluated waist, in evaluation order.
    pub scan: Vec<(f64, f64)>,
    pub within_tolerance: bool,
}

fn evaluate(beam_a: &BeamSpec, beam_b: &BeamSpec, volume: &VolumeSpec, species: &AtomSpecies, w0: f64) -> Result<TrapReport, TrapError> {
    let a = BeamSpec { waist_w0: w0, ..*beam_a };
    let b = BeamSpec { waist_w0: w0, ..*beam_b };
    let vol = crossed_bbt_intensity(&a, &b, volume)?;
    let pot = potential_from_intensity(&vol, species, a.wavelength)?;
    analyze_trap(&pot, species.mass, &Vec3::zeros())
}

/// Find the common waist of both beams that gives the target transverse trap
/// size at fixed crossing angle: coarse scan over the range, then bisection
/// inside the first bracketing interval.
pub fn calibrate_waist(
    beam_a: &BeamSpec,
    beam_b: &BeamSpec,
    volume: &VolumeSpec,
    species: &AtomSpecies,
    cal: &CalibrationSpec,
) -> Result<CalibrationResult, TrapError> {
    if !(cal.w0_min > 0.0 && cal.w0_max > cal.w0_min && cal.w0_step > 0.0) {
        return Err(TrapError::Calibration("invalid waist scan range".into()));
    }
    let target = cal.target_transverse;
    let mut scan = Vec::new();
    let mut best: Option<(f64, TrapReport)> = None;
    let consider = |w0: f64, rep: TrapReport, best: &mut Option<(f64, TrapReport)>| {
        let err = (rep.size_transverse - target).abs();
        if best.as_ref().is_none_or(|(_, b)| err < (b.size_transverse - target).abs()) {
            *best = Some((w0, rep));
        }
    };

    let n = ((cal.w0_max - cal.w0_min) / cal.w0_step).round() as usize;
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for s in 0..=n {
        let w0 = (cal.w0_min + s as f64 * cal.w0_step).min(cal.w0_max);
        let rep = match evaluate(beam_a, beam_b, volume, species, w0) {
            Ok(r) => r,
            Err(TrapError::NotEnclosed) | Err(TrapError::InsufficientResolution { .. }) => continue,
            Err(e) => return Err(e),
        };
        let size = rep.size_transverse;
        scan.push((w0, size));
        consider(w0, rep, &mut best);
        if let Some((pw, ps)) = prev {
            if (ps - target) * (size - target) <= 0.0 {
                bracket = Some((pw, w0));
                break;
            }
        }
        prev = Some((w0, size));
    }

    if let Some((mut lo, mut hi)) = bracket {
        let size_lo = scan.iter().find(|(w, _)| *w == lo).map(|s| s.1).unwrap();
        let increasing = size_lo < target;
        for _ in 0..12 {
            let mid = 0.5 * (lo + hi);
            let rep = evaluate(beam_a, beam_b, volume, species, mid)?;
            let size = rep.size_transverse;
            scan.push((mid, size));
            consider(mid, rep, &mut best);
            if (size < target) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
            if (size / target - 1.0).abs() < 0.1 * cal.tolerance {
                break;
            }
        }
    }

    let (w0, report) = best.ok_or_else(|| TrapError::Calibration("no enclosed trap in scan range".into()))?;
    let within_tolerance = (report.size_transverse / target - 1.0).abs() <= cal.tolerance;
    Ok(CalibrationResult {
        w0,
        report,
        scan,
        within_tolerance,
    })
}
