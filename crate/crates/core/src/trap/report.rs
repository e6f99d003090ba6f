use serde::{Deserialize, Serialize};

use super::{escape_barrier_parallel, find_minimum, sub_barrier_region, trap_frequencies, AxisFit, PotentialGrid, TrapError};
use crate::constants::J_PER_UK;
use crate::grid::Vec3;

/// Figures of merit of a trap. Sizes are measured on the barrier-energy
/// contour along the grid axes through the minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapReport {
    pub minimum_position: Vec3,
    pub minimum_node: [usize; 3],
    pub minimum_energy: f64,
    pub barrier_energy: f64,
    pub barrier_resolution: f64,
    /// Highest bisection threshold whose flood stays enclosed; the sub-barrier
    /// region is the flood at this level.
    pub enclosed_threshold: f64,
    pub saddle_position: Vec3,
    pub enclosed: bool,
    pub axis_fits: [AxisFit; 3],
    /// Full widths along x, y, z at the barrier contour, m.
    pub size_xyz: [f64; 3],
    pub size_transverse: f64,
    pub size_axial: f64,
    /// Bounding-box extent of the connected sub-barrier region along x, y, z, m.
    pub region_extent: [f64; 3],
    /// Number of nodes in the connected sub-barrier region.
    pub region_cells: usize,
}

impl TrapReport {
    pub fn barrier_height(&self) -> f64 {
        self.barrier_energy - self.minimum_energy
    }

    pub fn barrier_uk(&self) -> f64 {
        self.barrier_energy / J_PER_UK
    }

    /// Frequencies in rad/s; `NaN` for axes flagged anharmonic.
    pub fn trap_frequencies(&self) -> [f64; 3] {
        self.axis_fits.map(|f| f.omega().unwrap_or(f64::NAN))
    }

    /// Node indices of the connected sub-barrier region.
    pub fn region(&self, pot: &PotentialGrid) -> Vec<usize> {
        sub_barrier_region(pot, &self.minimum_position, self.enclosed_threshold)
    }

    pub fn max_frequency(&self) -> Option<f64> {
        self.axis_fits.iter().filter_map(|f| f.omega()).reduce(f64::max)
    }
}

/// Distance from the minimum node to the barrier contour along `axis` in
/// direction `dir`, walking through region cells and interpolating linearly
/// between the last inside node and the first outside node.
fn half_width(pot: &PotentialGrid, inside: &[bool], from: [usize; 3], axis: usize, dir: isize, level: f64) -> f64 {
    let g = &pot.geometry;
    let mut idx = from;
    let mut steps = 0usize;
    loop {
        let next = idx[axis] as isize + dir;
        if next < 0 || next >= g.dims[axis] as isize {
            return steps as f64 * g.pitches[axis];
        }
        let mut n = idx;
        n[axis] = next as usize;
        if !inside[g.index(n[0], n[1], n[2])] {
            let (u_in, u_out) = (pot.at(idx), pot.at(n));
            let frac = if u_out > u_in {
                ((level - u_in) / (u_out - u_in)).clamp(0.0, 1.0)
            } else {
                0.5
            };
            return (steps as f64 + frac) * g.pitches[axis];
        }
        idx = n;
        steps += 1;
    }
}

/// Minimum, escape barrier, sub-barrier sizes and frequencies, starting the
/// minimum search at `seed`.
pub fn analyze_trap(pot: &PotentialGrid, mass: f64, seed: &Vec3) -> Result<TrapReport, TrapError> {
    let min = find_minimum(pot, seed)?;
    let barrier = escape_barrier_parallel(pot, &min.position);
    if !barrier.enclosed {
        return Err(TrapError::NotEnclosed);
    }
    let g = &pot.geometry;
    let region = sub_barrier_region(pot, &min.position, barrier.enclosed_threshold);
    let mut inside = vec![false; g.len()];
    for &n in &region {
        inside[n] = true;
    }
    let level = barrier.barrier_energy;
    let size_xyz: [f64; 3] =
        std::array::from_fn(|a| half_width(pot, &inside, min.node, a, -1, level) + half_width(pot, &inside, min.node, a, 1, level));
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for &n in &region {
        let ijk = g.unindex(n);
        for a in 0..3 {
            lo[a] = lo[a].min(ijk[a]);
            hi[a] = hi[a].max(ijk[a]);
        }
    }
    let region_extent: [f64; 3] = std::array::from_fn(|a| (hi[a] - lo[a] + 1) as f64 * g.pitches[a]);
    let axis_fits = trap_frequencies(pot, min.node, barrier.barrier_energy - min.energy, mass)?;
    Ok(TrapReport {
        minimum_position: min.position,
        minimum_node: min.node,
        minimum_energy: min.energy,
        barrier_energy: barrier.barrier_energy,
        barrier_resolution: barrier.step,
        enclosed_threshold: barrier.enclosed_threshold,
        saddle_position: barrier.saddle_position,
        enclosed: barrier.enclosed,
        axis_fits,
        size_xyz,
        size_transverse: 0.5 * (size_xyz[0] + size_xyz[1]),
        size_axial: size_xyz[2],
        region_extent,
        region_cells: region.len(),
    })
}
