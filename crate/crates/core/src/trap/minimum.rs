use super::{PotentialGrid, TrapError};
use crate::grid::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub node: [usize; 3],
    pub position: Vec3,
    pub energy: f64,
}

/// Steepest descent from `seed` over the sampled nodes (26-neighbourhood),
/// then a per-axis three-point parabola to place the minimum between nodes.
///
/// The trilinear interpolant of the grid attains its minimum on a node, so
/// node descent is descent on that interpolant; the parabola only refines
/// the reported position and energy.
pub fn find_minimum(pot: &PotentialGrid, seed: &Vec3) -> Result<Minimum, TrapError> {
    let g = &pot.geometry;
    if !g.contains(seed) {
        return Err(TrapError::SeedOutsideGrid);
    }
    let max_iter = g.dims.iter().sum::<usize>() * 2;
    let mut cur = g.nearest(seed);
    let mut converged = false;
    for _ in 0..max_iter {
        let mut best = cur;
        let mut best_u = pot.at(cur);
        for dk in -1isize..=1 {
            for dj in -1isize..=1 {
                for di in -1isize..=1 {
                    let n = [cur[0] as isize + di, cur[1] as isize + dj, cur[2] as isize + dk];
                    if (0..3).any(|a| n[a] < 0 || n[a] >= g.dims[a] as isize) {
                        continue;
                    }
                    let n = [n[0] as usize, n[1] as usize, n[2] as usize];
                    let u = pot.at(n);
                    if u < best_u {
                        best_u = u;
                        best = n;
                    }
                }
            }
        }
        if best == cur {
            converged = true;
            break;
        }
        cur = best;
    }
    if !converged {
        return Err(TrapError::NonConvergence { iterations: max_iter });
    }

    let u0 = pot.at(cur);
    let mut position = g.position(cur);
    let mut energy = u0;
    for a in 0..3 {
        if cur[a] == 0 || cur[a] + 1 >= g.dims[a] {
            continue;
        }
        let mut lo = cur;
        let mut hi = cur;
        lo[a] -= 1;
        hi[a] += 1;
        let (um, up) = (pot.at(lo), pot.at(hi));
        let curv = um - 2.0 * u0 + up;
        if curv > 0.0 {
            let s = (0.5 * (um - up) / curv).clamp(-0.5, 0.5);
            position[a] += s * g.pitches[a];
            energy -= 0.25 * (um - up) * s;
        }
    }
    Ok(Minimum {
        node: cur,
        position,
        energy: energy.min(u0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Geometry, VolumeSpec};

    #[test]
    fn paraboloid_centre_within_one_pitch() {
        let g = Geometry::from_spec(&VolumeSpec::new([32, 32, 32], [0.1, 0.1, 0.2]));
        let c = Vec3::new(0.237, -0.41, 0.66);
        let pot = PotentialGrid::from_fn(g, |p| (p - c).norm_squared());
        let m = find_minimum(&pot, &Vec3::new(-1.0, 1.0, -2.0)).unwrap();
        for a in 0..3 {
            assert!((m.position[a] - c[a]).abs() < g.pitches[a]);
        }
        // three-point parabola is exact for a quadratic
        assert!((m.position - c).norm() < 1e-9);
        assert!(m.energy.abs() < 1e-9);
    }

    #[test]
    fn seed_outside_rejected() {
        let g = Geometry::from_spec(&VolumeSpec::new([4, 4, 4], [1.0; 3]));
        let pot = PotentialGrid::from_fn(g, |p| p.norm());
        assert!(matches!(
            find_minimum(&pot, &Vec3::new(50.0, 0.0, 0.0)),
            Err(TrapError::SeedOutsideGrid)
        ));
    }
}
