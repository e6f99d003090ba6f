use std::f64::consts::PI;

use num_complex::Complex64;

use super::{BeamSpec, OpticsError, ScalarField};
use crate::grid::GridSpec;

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// LG(p=0, l) intensity in the beam frame at squared radius `r2` and axial
/// distance `z` from the waist. Integrates to `spec.power` over the plane.
#[inline]
pub fn lg_intensity_local(spec: &BeamSpec, r2: f64, z: f64) -> f64 {
    let zr = spec.rayleigh_range();
    let s = z / zr;
    let w2 = spec.waist_w0 * spec.waist_w0 * (1.0 + s * s);
    let l = spec.charge_l.unsigned_abs();
    let u = 2.0 * r2 / w2;
    let peak = 2.0 * spec.power / (PI * w2 * factorial(l));
    peak * u.powi(l as i32) * (-u).exp()
}

/// Analytic LG(p=0, l) field on `grid` at distance `z` from the waist,
/// evaluated in the beam's own frame. Includes the `exp(ikz)` carrier, the
/// wavefront curvature and the `(|l|+1)` Gouy phase. The sampled field is
/// rescaled so its discrete power equals `spec.power`.
pub fn lg_field(spec: &BeamSpec, grid: GridSpec, z: f64) -> Result<ScalarField, OpticsError> {
    spec.validate()?;
    if !grid.nx.is_power_of_two() || !grid.ny.is_power_of_two() {
        return Err(OpticsError::GridNotPowerOfTwo { nx: grid.nx, ny: grid.ny });
    }
    let samples = spec.waist_w0 / grid.pitch;
    if !(samples >= 8.0) {
        return Err(OpticsError::GridTooCoarse { samples });
    }

    let k = spec.wavenumber();
    let zr = spec.rayleigh_range();
    let w = spec.radius_at(z);
    let l = spec.charge_l;
    let al = l.unsigned_abs();
    let inv_r = z / (z * z + zr * zr);
    let gouy = (al as f64 + 1.0) * (z / zr).atan();
    let norm = (2.0 * spec.power / (PI * factorial(al))).sqrt() / w;

    let mut amplitude = Vec::with_capacity(grid.nx * grid.ny);
    for j in 0..grid.ny {
        let y = grid.y(j);
        for i in 0..grid.nx {
            let x = grid.x(i);
            let r2 = x * x + y * y;
            let radial = (2.0f64.sqrt() * r2.sqrt() / w).powi(al as i32) * (-r2 / (w * w)).exp();
            let phase = l as f64 * y.atan2(x) + k * z + 0.5 * k * r2 * inv_r - gouy;
            amplitude.push(Complex64::from_polar(norm * radial, phase));
        }
    }

    let mut field = ScalarField {
        grid_nx: grid.nx,
        grid_ny: grid.ny,
        pitch: grid.pitch,
        z_plane: z,
        wavelength: spec.wavelength,
        amplitude,
    };
    let p = field.power();
    if p > 0.0 {
        let scale = (spec.power / p).sqrt();
        field.amplitude.iter_mut().for_each(|a| *a *= scale);
    }
    Ok(field)
}

/// Radius of the intensity maximum along the +x half-row through the centre,
/// refined by a three-point parabola. Returns `None` if the maximum sits on
/// the row ends.
pub fn ring_radius(field: &ScalarField) -> Option<f64> {
    let grid = field.grid();
    let j = grid.ny / 2;
    let i0 = grid.nx / 2;
    let row: Vec<f64> = (i0..grid.nx).map(|i| field.at(i, j).norm_sqr()).collect();
    let (imax, _) = row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    if imax == 0 || imax + 1 >= row.len() {
        return None;
    }
    let (a, b, c) = (row[imax - 1], row[imax], row[imax + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Some((imax as f64 + shift) * grid.pitch)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(w0: f64) -> BeamSpec {
        BeamSpec {
            waist_w0: w0,
            power: 0.24,
            ..BeamSpec::default()
        }
    }

    #[test]
    fn on_axis_null_for_unit_charge() {
        let g = GridSpec::new(128, 128, 50e-9);
        let f = lg_field(&spec(2.3e-6), g, 0.0).unwrap();
        assert_eq!(f.at(64, 64).norm(), 0.0);
    }

    #[test]
    fn ring_at_waist_over_root_two() {
        let g = GridSpec::new(256, 256, 25e-9);
        let w0 = 2.3e-6;
        let f = lg_field(&spec(w0), g, 0.0).unwrap();
        let r = ring_radius(&f).unwrap();
        assert!((r / (w0 / 2f64.sqrt()) - 1.0).abs() < 1e-3, "r = {r}");
    }

    #[test]
    fn discrete_power_matches_spec() {
        let g = GridSpec::new(256, 256, 50e-9);
        for z in [0.0, 5e-6, -10e-6] {
            let f = lg_field(&spec(2.3e-6), g, z).unwrap();
            assert!((f.power() / 0.24 - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_coarse_grid_and_bad_beams() {
        let g = GridSpec::new(64, 64, 1e-6);
        assert!(matches!(lg_field(&spec(2.3e-6), g, 0.0), Err(OpticsError::GridTooCoarse { .. })));
        let g = GridSpec::new(64, 64, 50e-9);
        assert!(lg_field(&spec(-1.0), g, 0.0).is_err());
        let mut s = spec(2.3e-6);
        s.wavelength = 0.0;
        assert!(lg_field(&s, g, 0.0).is_err());
        assert!(matches!(
            lg_field(&spec(2.3e-6), GridSpec::new(100, 64, 50e-9), 0.0),
            Err(OpticsError::GridNotPowerOfTwo { .. })
        ));
    }

    #[test]
    fn local_intensity_integrates_to_power() {
        let s = BeamSpec {
            charge_l: 2,
            ..spec(2.0e-6)
        };
        // radial quadrature of 2πr·I(r)
        let n = 20000;
        let rmax = 20e-6;
        let dr = rmax / n as f64;
        let total: f64 = (0..n)
            .map(|i| {
                let r = (i as f64 + 0.5) * dr;
                2.0 * PI * r * lg_intensity_local(&s, r * r, 7e-6) * dr
            })
            .sum();
        assert!((total / s.power - 1.0).abs() < 1e-6);
    }
}
