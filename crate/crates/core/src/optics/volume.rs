use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BeamSpec, OpticsError};
use crate::grid::{Geometry, Vec3, VolumeSpec};

/// Sampled intensity in W/m², x-fastest storage.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityVolume {
    pub geometry: Geometry,
    pub values: Vec<f64>,
}

impl IntensityVolume {
    pub fn zeros(spec: &VolumeSpec) -> Self {
        Self {
            geometry: Geometry::from_spec(spec),
            values: vec![0.0; spec.len()],
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.geometry.index(i, j, k)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Rebuild a volume from its xy slices, ordered by increasing z.
    pub fn from_xy_slices(slices: &[Slice2D], dz: f64) -> Result<Self, OpticsError> {
        let first = slices.first().ok_or_else(|| OpticsError::SliceMismatch("no slices".into()))?;
        if slices.iter().any(|s| s.plane != Plane::Xy) {
            return Err(OpticsError::SliceMismatch("all slices must be xy".into()));
        }
        let (nx, ny) = (first.axis_u.len(), first.axis_v.len());
        let mut values = Vec::with_capacity(nx * ny * slices.len());
        for s in slices {
            if s.axis_u.len() != nx || s.axis_v.len() != ny {
                return Err(OpticsError::SliceMismatch("slice shapes differ".into()));
            }
            values.extend_from_slice(&s.values);
        }
        let pitch = |ax: &[f64]| if ax.len() > 1 { ax[1] - ax[0] } else { 0.0 };
        Ok(Self {
            geometry: Geometry {
                dims: [nx, ny, slices.len()],
                pitches: [pitch(&first.axis_u), pitch(&first.axis_v), dz],
                origin: [first.axis_u[0], first.axis_v[0], first.coordinate],
            },
            values,
        })
    }
}

/// Intensity of two mutually incoherent (orthogonally polarised) vortex beams
/// crossing at the volume origin. Each beam is evaluated with the analytic LG
/// formula in its own rotated frame, and the intensities add.
pub fn crossed_bbt_intensity(beam_a: &BeamSpec, beam_b: &BeamSpec, volume: &VolumeSpec) -> Result<IntensityVolume, OpticsError> {
    beam_a.validate()?;
    beam_b.validate()?;
    if beam_a.polarization_tag == beam_b.polarization_tag {
        return Err(OpticsError::SamePolarization);
    }
    let geometry = Geometry::from_spec(volume);
    let [nx, ny, _] = geometry.dims;
    let mut values = vec![0.0; geometry.len()];
    values.par_chunks_mut(nx * ny).enumerate().for_each(|(k, plane)| {
        let z = geometry.coord(2, k);
        for j in 0..ny {
            let y = geometry.coord(1, j);
            for i in 0..nx {
                let p = Vec3::new(geometry.coord(0, i), y, z);
                plane[i + nx * j] = beam_a.intensity_at(&p) + beam_b.intensity_at(&p);
            }
        }
    });
    Ok(IntensityVolume { geometry, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Xy,
    Xz,
    Yz,
}

impl Plane {
    /// (in-plane axes, slicing axis).
    pub fn axes(self) -> ([usize; 2], usize) {
        match self {
            Plane::Xy => ([0, 1], 2),
            Plane::Xz => ([0, 2], 1),
            Plane::Yz => ([1, 2], 0),
        }
    }

    pub fn axis_names(self) -> [&'static str; 2] {
        match self {
            Plane::Xy => ["x", "y"],
            Plane::Xz => ["x", "z"],
            Plane::Yz => ["y", "z"],
        }
    }
}

impl std::str::FromStr for Plane {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "xy" => Ok(Plane::Xy),
            "xz" => Ok(Plane::Xz),
            "yz" => Ok(Plane::Yz),
            other => Err(format!("unknown plane '{other}'")),
        }
    }
}

/// One plane of a volume. `values[iu + nu·iv]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice2D {
    pub plane: Plane,
    /// Coordinate of the plane actually extracted (nearest node).
    pub coordinate: f64,
    pub axis_u: Vec<f64>,
    pub axis_v: Vec<f64>,
    pub values: Vec<f64>,
}

impl Slice2D {
    /// CSV with a `# u_m, v_m, intensity_W_m2` header, u fastest.
    pub fn to_csv(&self, quantity: &str) -> String {
        let [u, v] = self.plane.axis_names();
        let mut out = format!("# {u}_m, {v}_m, {quantity}\n");
        for (iv, &cv) in self.axis_v.iter().enumerate() {
            for (iu, &cu) in self.axis_u.iter().enumerate() {
                let val = self.values[iu + self.axis_u.len() * iv];
                out.push_str(&format!("{cu:e},{cv:e},{val:e}\n"));
            }
        }
        out
    }
}

/// Nearest-plane extraction, no interpolation across the slicing axis.
pub fn slice_extract(vol: &IntensityVolume, plane: Plane, coordinate: f64) -> Result<Slice2D, OpticsError> {
    let g = &vol.geometry;
    let ([au, av], s) = plane.axes();
    let min = g.origin[s];
    let max = g.coord(s, g.dims[s] - 1);
    let tol = 0.5 * g.pitches[s];
    if !(coordinate >= min - tol && coordinate <= max + tol) {
        return Err(OpticsError::SliceOutOfRange { coordinate, min, max });
    }
    let idx = (((coordinate - min) / g.pitches[s]).round() as usize).min(g.dims[s] - 1);
    let axis_u: Vec<f64> = (0..g.dims[au]).map(|i| g.coord(au, i)).collect();
    let axis_v: Vec<f64> = (0..g.dims[av]).map(|i| g.coord(av, i)).collect();
    let mut values = Vec::with_capacity(axis_u.len() * axis_v.len());
    for iv in 0..axis_v.len() {
        for iu in 0..axis_u.len() {
            let mut n = [0usize; 3];
            n[au] = iu;
            n[av] = iv;
            n[s] = idx;
            values.push(vol.values[g.index(n[0], n[1], n[2])]);
        }
    }
    Ok(Slice2D {
        plane,
        coordinate: g.coord(s, idx),
        axis_u,
        axis_v,
        values,
    })
}
