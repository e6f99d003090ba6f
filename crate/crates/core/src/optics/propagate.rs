use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::{OpticsError, ScalarField};

/// Evanescent power above this fraction triggers a warning in [`propagate`].
const EVANESCENT_WARN: f64 = 1e-3;

struct Plans {
    row: Arc<dyn Fft<f64>>,
    col: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(nx: usize, ny: usize, dir: FftDirection) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            row: planner.plan_fft(nx, dir),
            col: planner.plan_fft(ny, dir),
        }
    }
}

fn transpose(data: &[Complex64], nx: usize, ny: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            out[j + ny * i] = data[i + nx * j];
        }
    }
    out
}

/// Unnormalised 2D FFT of an x-fastest array.
fn fft2(data: &mut Vec<Complex64>, nx: usize, ny: usize, plans: &Plans) {
    data.par_chunks_mut(nx).for_each(|row| plans.row.process(row));
    let mut t = transpose(data, nx, ny);
    t.par_chunks_mut(ny).for_each(|col| plans.col.process(col));
    *data = transpose(&t, ny, nx);
}

fn wavenumbers(n: usize, pitch: f64) -> Vec<f64> {
    let span = n as f64 * pitch;
    (0..n)
        .map(|i| {
            let f = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
            2.0 * PI * f / span
        })
        .collect()
}

fn spectrum(field: &ScalarField) -> Vec<Complex64> {
    let mut data = field.amplitude.clone();
    let plans = Plans::new(field.grid_nx, field.grid_ny, FftDirection::Forward);
    fft2(&mut data, field.grid_nx, field.grid_ny, &plans);
    data
}

/// Fraction of the field's spectral power carried by evanescent components
/// (transverse wavenumber at or above k).
pub fn evanescent_fraction(field: &ScalarField) -> f64 {
    let k = 2.0 * PI / field.wavelength;
    let spec = spectrum(field);
    let kx = wavenumbers(field.grid_nx, field.pitch);
    let ky = wavenumbers(field.grid_ny, field.pitch);
    let mut total = 0.0;
    let mut evan = 0.0;
    for (j, &ky) in ky.iter().enumerate() {
        for (i, &kx) in kx.iter().enumerate() {
            let p = spec[i + field.grid_nx * j].norm_sqr();
            total += p;
            if kx * kx + ky * ky >= k * k {
                evan += p;
            }
        }
    }
    if total > 0.0 {
        evan / total
    } else {
        0.0
    }
}

/// Scalar angular-spectrum propagation by `dz` (either sign), using the full
/// transfer phase `exp(i·dz·√(k² − kx² − ky²))`. Evanescent components decay
/// as `exp(−|dz|·√(kx² + ky² − k²))` for both signs of `dz`.
pub fn propagate(field: &ScalarField, dz: f64) -> Result<ScalarField, OpticsError> {
    field.check_finite()?;
    if !field.grid_nx.is_power_of_two() || !field.grid_ny.is_power_of_two() {
        return Err(OpticsError::GridNotPowerOfTwo {
            nx: field.grid_nx,
            ny: field.grid_ny,
        });
    }
    if dz == 0.0 {
        return Ok(field.clone());
    }
    let (nx, ny) = (field.grid_nx, field.grid_ny);
    let k = 2.0 * PI / field.wavelength;
    let kx = wavenumbers(nx, field.pitch);
    let ky = wavenumbers(ny, field.pitch);

    let mut data = field.amplitude.clone();
    fft2(&mut data, nx, ny, &Plans::new(nx, ny, FftDirection::Forward));

    let mut total = 0.0;
    let mut evan = 0.0;
    data.par_chunks_mut(nx)
        .zip(ky.par_iter())
        .map(|(row, &ky)| {
            let mut t = 0.0;
            let mut e = 0.0;
            for (a, &kx) in row.iter_mut().zip(kx.iter()) {
                let kt2 = kx * kx + ky * ky;
                let p = a.norm_sqr();
                t += p;
                if kt2 < k * k {
                    *a *= Complex64::from_polar(1.0, dz * (k * k - kt2).sqrt());
                } else {
                    e += p;
                    *a *= (-dz.abs() * (kt2 - k * k).sqrt()).exp();
                }
            }
            (t, e)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .for_each(|(t, e)| {
            total += t;
            evan += e;
        });
    if total > 0.0 && evan / total > EVANESCENT_WARN {
        log::warn!(
            "{:.3}% of the field power is evanescent and will not propagate",
            100.0 * evan / total
        );
    }

    fft2(&mut data, nx, ny, &Plans::new(nx, ny, FftDirection::Inverse));
    let scale = 1.0 / (nx * ny) as f64;
    data.iter_mut().for_each(|a| *a *= scale);

    Ok(ScalarField {
        amplitude: data,
        z_plane: field.z_plane + dz,
        ..field.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::optics::{lg_field, BeamSpec};

    fn field() -> ScalarField {
        let spec = BeamSpec {
            waist_w0: 2.3e-6,
            ..BeamSpec::default()
        };
        lg_field(&spec, GridSpec::new(256, 256, 100e-9), 0.0).unwrap()
    }

    #[test]
    fn zero_step_is_identity() {
        let f = field();
        assert_eq!(propagate(&f, 0.0).unwrap(), f);
    }

    #[test]
    fn forward_then_back_restores_field() {
        let f = field();
        let g = propagate(&propagate(&f, 7e-6).unwrap(), -7e-6).unwrap();
        let peak = f.amplitude.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let err = f
            .amplitude
            .iter()
            .zip(&g.amplitude)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err / peak < 1e-9, "err {err:e}");
        assert!((g.z_plane - f.z_plane).abs() < 1e-18);
    }

    #[test]
    fn propagating_power_conserved() {
        let f = field();
        let g = propagate(&f, 12e-6).unwrap();
        assert!((g.power() / f.power() - 1.0).abs() < 1e-9);
        assert!(evanescent_fraction(&f) < 1e-12);
    }

    #[test]
    fn evanescent_content_is_detected() {
        // a single-sample spike has a flat spectrum reaching past k
        let mut f = field();
        f.amplitude.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        f.amplitude[128 + 256 * 128] = Complex64::new(1.0, 0.0);
        assert!(evanescent_fraction(&f) > 0.5);
        let g = propagate(&f, 1e-6).unwrap();
        assert!(g.power() < f.power());
    }
}
