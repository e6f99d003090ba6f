use serde::{Deserialize, Serialize};

use super::{PotentialGrid, TrapError};

/// Relative RMS residual above which an axis is reported as anharmonic.
pub const ANHARMONIC_RESIDUAL: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AxisFit {
    Harmonic { omega: f64, residual: f64, samples: usize },
    Anharmonic { residual: f64, samples: usize },
}

impl AxisFit {
    pub fn omega(&self) -> Option<f64> {
        match *self {
            AxisFit::Harmonic { omega, .. } => Some(omega),
            AxisFit::Anharmonic { .. } => None,
        }
    }
}

/// Least-squares `a + b·d + c·d²` through the points; returns (c, relative
/// RMS residual).
fn quadratic_fit(d: &[f64], u: &[f64]) -> (f64, f64) {
    // normalise abscissa for conditioning
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut s = [0.0f64; 5];
    let mut t = [0.0f64; 3];
    for (&x, &y) in d.iter().zip(u) {
        let x = x / scale;
        let mut p = 1.0;
        for sk in s.iter_mut() {
            *sk += p;
            p *= x;
        }
        t[0] += y;
        t[1] += x * y;
        t[2] += x * x * y;
    }
    let m = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d0 = det(&m);
    let col = |c: usize| {
        let mut mm = m;
        for r in 0..3 {
            mm[r][c] = t[r];
        }
        det(&mm) / d0
    };
    let (a, b, c) = (col(0), col(1), col(2));
    let span = u.iter().cloned().fold(f64::MIN, f64::max) - u.iter().cloned().fold(f64::MAX, f64::min);
    let rms = (d
        .iter()
        .zip(u)
        .map(|(&x, &y)| {
            let x = x / scale;
            (y - (a + b * x + c * x * x)).powi(2)
        })
        .sum::<f64>()
        / d.len() as f64)
        .sqrt();
    let rel = if span > 0.0 { rms / span } else { 0.0 };
    (c / (scale * scale), rel)
}

/// Harmonic frequencies along the grid axes through the minimum node.
/// Each axis is fit with a quadratic over the contiguous run of nodes lying
/// less than a tenth of `barrier_height` above the minimum; `ω = √(k/m)`.
pub fn trap_frequencies(pot: &PotentialGrid, center: [usize; 3], barrier_height: f64, mass: f64) -> Result<[AxisFit; 3], TrapError> {
    let g = &pot.geometry;
    let u0 = pot.at(center);
    let cut = u0 + 0.1 * barrier_height;
    let mut out = [AxisFit::Anharmonic { residual: 0.0, samples: 0 }; 3];
    for axis in 0..3 {
        let mut idx = center;
        let mut lo = center[axis];
        while lo > 0 {
            idx[axis] = lo - 1;
            if pot.at(idx) >= cut {
                break;
            }
            lo -= 1;
        }
        let mut hi = center[axis];
        while hi + 1 < g.dims[axis] {
            idx[axis] = hi + 1;
            if pot.at(idx) >= cut {
                break;
            }
            hi += 1;
        }
        let samples = hi - lo + 1;
        if samples < 5 {
            return Err(TrapError::InsufficientResolution { axis, samples });
        }
        let mut d = Vec::with_capacity(samples);
        let mut u = Vec::with_capacity(samples);
        for n in lo..=hi {
            idx[axis] = n;
            d.push((n as f64 - center[axis] as f64) * g.pitches[axis]);
            u.push(pot.at(idx));
        }
        let (c, residual) = quadratic_fit(&d, &u);
        let k = 2.0 * c;
        out[axis] = if residual > ANHARMONIC_RESIDUAL || !(k > 0.0) {
            AxisFit::Anharmonic { residual, samples }
        } else {
            AxisFit::Harmonic {
                omega: (k / mass).sqrt(),
                residual,
                samples,
            }
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Geometry, Vec3, VolumeSpec};

    #[test]
    fn harmonic_grid_exact() {
        let g = Geometry::from_spec(&VolumeSpec::new([32, 32, 32], [0.05e-6, 0.05e-6, 0.2e-6]));
        let k = 3.7e-15;
        let m = 2.2e-25;
        let pot = PotentialGrid::from_fn(g, |p| 0.5 * k * p.norm_squared());
        let b = 0.5 * k * (2.0e-6f64).powi(2);
        let fits = trap_frequencies(&pot, [16, 16, 16], b, m).unwrap();
        for f in fits {
            let w = f.omega().unwrap();
            assert!((w / (k / m).sqrt() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn quartic_flagged_anharmonic() {
        let g = Geometry::from_spec(&VolumeSpec::new([41, 41, 41], [0.1; 3]));
        let pot = PotentialGrid::from_fn(g, |p: &Vec3| {
            p.y.powi(2) + if p.z.abs() < 1.5 { 0.0 } else { 100.0 } + if p.x.abs() < 1.5 { p.x.abs() } else { 100.0 }
        });
        let fits = trap_frequencies(&pot, [20, 20, 20], 80.0, 1.0).unwrap();
        assert!(fits[1].omega().is_some());
        assert!(fits[2].omega().is_none());
    }

    #[test]
    fn too_few_samples() {
        let g = Geometry::from_spec(&VolumeSpec::new([9, 9, 9], [1.0; 3]));
        let pot = PotentialGrid::from_fn(g, |p| p.norm_squared());
        assert!(matches!(
            trap_frequencies(&pot, [4, 4, 4], 1.0, 1.0),
            Err(TrapError::InsufficientResolution { .. })
        ));
    }
}
