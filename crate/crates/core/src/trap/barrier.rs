use rayon::prelude::*;

use super::PotentialGrid;
use crate::grid::{Geometry, Vec3};

/// Number of threshold bisections; the barrier is resolved to
/// `(max U − U(center)) / 2^BISECTION_DEPTH`.
pub const BISECTION_DEPTH: u32 = 20;
const STEPS: u64 = 1 << BISECTION_DEPTH;

#[derive(Debug, Clone, PartialEq)]
pub struct Barrier {
    /// Lowest sampled threshold at which the flood from the center reaches
    /// the volume boundary, J.
    pub barrier_energy: f64,
    /// Highest threshold known to keep the flood enclosed, J.
    pub enclosed_threshold: f64,
    pub saddle_index: [usize; 3],
    pub saddle_position: Vec3,
    /// False when the center already connects to the boundary at its own
    /// energy; `barrier_energy` is then `U(center)`.
    pub enclosed: bool,
    /// Bisection resolution, J.
    pub step: f64,
}

/// Reusable 6-connected flood fill with generation stamps.
struct Flood<'a> {
    pot: &'a PotentialGrid,
    stamp: Vec<u32>,
    generation: u32,
    queue: Vec<usize>,
}

impl<'a> Flood<'a> {
    fn new(pot: &'a PotentialGrid) -> Self {
        Self {
            pot,
            stamp: vec![0; pot.values.len()],
            generation: 0,
            queue: Vec::new(),
        }
    }

    fn neighbours(g: &Geometry, idx: usize) -> impl Iterator<Item = usize> {
        let [i, j, k] = g.unindex(idx);
        let [nx, ny, nz] = g.dims;
        let sx = 1;
        let sy = nx;
        let sz = nx * ny;
        [
            (i > 0).then(|| idx - sx),
            (i + 1 < nx).then(|| idx + sx),
            (j > 0).then(|| idx - sy),
            (j + 1 < ny).then(|| idx + sy),
            (k > 0).then(|| idx - sz),
            (k + 1 < nz).then(|| idx + sz),
        ]
        .into_iter()
        .flatten()
    }

    /// Flood cells with `U <= threshold` from `start`. Stops at the first
    /// boundary cell when `stop_at_boundary`; returns that cell if reached.
    /// With `parents`, records the BFS tree.
    fn run(&mut self, start: usize, threshold: f64, stop_at_boundary: bool, mut parents: Option<&mut Vec<usize>>) -> Option<usize> {
        let g = self.pot.geometry;
        self.generation += 1;
        let gen = self.generation;
        self.queue.clear();
        if !(self.pot.values[start] <= threshold) {
            return None;
        }
        self.stamp[start] = gen;
        self.queue.push(start);
        let mut head = 0;
        let mut hit = None;
        while head < self.queue.len() {
            let c = self.queue[head];
            head += 1;
            if g.on_boundary(g.unindex(c)) {
                if hit.is_none() {
                    hit = Some(c);
                }
                if stop_at_boundary {
                    return hit;
                }
            }
            for n in Self::neighbours(&g, c) {
                if self.stamp[n] != gen && self.pot.values[n] <= threshold {
                    self.stamp[n] = gen;
                    if let Some(p) = parents.as_deref_mut() {
                        p[n] = c;
                    }
                    self.queue.push(n);
                }
            }
        }
        hit
    }

    fn escapes(&mut self, start: usize, threshold: f64) -> bool {
        self.run(start, threshold, true, None).is_some()
    }
}

struct Ladder {
    lo: f64,
    hi: f64,
}

impl Ladder {
    fn threshold(&self, j: u64) -> f64 {
        if j >= STEPS {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * (j as f64 / STEPS as f64)
        }
    }
}

fn setup(pot: &PotentialGrid, center: &Vec3) -> (usize, Ladder) {
    let g = &pot.geometry;
    let c = g.nearest(center);
    let start = g.index(c[0], c[1], c[2]);
    let lo = pot.values[start];
    let hi = pot.values.iter().copied().fold(lo, f64::max);
    (start, Ladder { lo, hi })
}

fn finish(pot: &PotentialGrid, start: usize, ladder: &Ladder, j: u64, enclosed: bool) -> Barrier {
    let g = pot.geometry;
    let barrier_energy = ladder.threshold(j);
    let mut parents = vec![usize::MAX; pot.values.len()];
    let mut flood = Flood::new(pot);
    let exit = flood.run(start, barrier_energy, true, Some(&mut parents)).unwrap_or(start);
    // highest cell on the BFS escape path, ties to the lowest index
    let mut saddle = exit;
    let mut c = exit;
    loop {
        let (u, us) = (pot.values[c], pot.values[saddle]);
        if u > us || (u == us && c < saddle) {
            saddle = c;
        }
        if c == start {
            break;
        }
        c = parents[c];
    }
    let idx = g.unindex(saddle);
    Barrier {
        barrier_energy,
        enclosed_threshold: if enclosed { ladder.threshold(j - 1) } else { ladder.lo },
        saddle_index: idx,
        saddle_position: g.position(idx),
        enclosed,
        step: (ladder.hi - ladder.lo) / STEPS as f64,
    }
}

/// Escape barrier from `center`: the smallest threshold (on a 2^20-step
/// ladder between `U(center)` and `max U`) at which a 6-connected flood fill
/// of sub-threshold cells reaches the volume boundary. Found by bisection.
pub fn escape_barrier(pot: &PotentialGrid, center: &Vec3) -> Barrier {
    let (start, ladder) = setup(pot, center);
    let mut flood = Flood::new(pot);
    if flood.escapes(start, ladder.lo) {
        return finish(pot, start, &ladder, 0, false);
    }
    let (mut lo, mut hi) = (0u64, STEPS);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if flood.escapes(start, ladder.threshold(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    finish(pot, start, &ladder, hi, true)
}

/// Same ladder and predicate as [`escape_barrier`], but probes three
/// thresholds per round in parallel. Because the flood predicate is
/// monotone in the threshold, both searches return the same ladder rung.
pub fn escape_barrier_parallel(pot: &PotentialGrid, center: &Vec3) -> Barrier {
    let (start, ladder) = setup(pot, center);
    if Flood::new(pot).escapes(start, ladder.lo) {
        return finish(pot, start, &ladder, 0, false);
    }
    let mut floods: Vec<Flood> = (0..3).map(|_| Flood::new(pot)).collect();
    let (mut lo, mut hi) = (0u64, STEPS);
    while hi - lo > 1 {
        let q = ((hi - lo) / 4).max(1);
        let probes: Vec<u64> = (1..=3).map(|m| lo + m * q).filter(|&p| p < hi).collect();
        let results: Vec<bool> = floods
            .par_iter_mut()
            .zip(probes.par_iter())
            .map(|(f, &p)| f.escapes(start, ladder.threshold(p)))
            .collect();
        let mut new_lo = lo;
        let mut new_hi = hi;
        for (&p, &esc) in probes.iter().zip(&results) {
            if esc {
                new_hi = new_hi.min(p);
            } else {
                new_lo = new_lo.max(p);
            }
        }
        lo = new_lo;
        hi = new_hi;
    }
    finish(pot, start, &ladder, hi, true)
}

/// Cells with `U <= threshold` connected to `center` (6-connectivity),
/// as flat indices in BFS order.
pub fn sub_barrier_region(pot: &PotentialGrid, center: &Vec3, threshold: f64) -> Vec<usize> {
    let g = &pot.geometry;
    let c = g.nearest(center);
    let start = g.index(c[0], c[1], c[2]);
    let mut flood = Flood::new(pot);
    flood.run(start, threshold, false, None);
    std::mem::take(&mut flood.queue)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VolumeSpec;

    #[test]
    fn uniform_zero_not_enclosed() {
        let g = Geometry::from_spec(&VolumeSpec::new([8, 8, 8], [1.0; 3]));
        let pot = PotentialGrid::from_values(g, vec![0.0; g.len()]);
        let b = escape_barrier(&pot, &Vec3::zeros());
        assert!(!b.enclosed);
        assert_eq!(b.barrier_energy, 0.0);
    }

    #[test]
    fn spherical_shell_barrier() {
        let g = Geometry::from_spec(&VolumeSpec::new([40, 40, 40], [0.1; 3]));
        let (u0, r0, s) = (3.0, 1.2, 0.3);
        let pot = PotentialGrid::from_fn(g, |p| u0 * (-(p.norm() - r0).powi(2) / (s * s)).exp());
        let b = escape_barrier(&pot, &Vec3::zeros());
        assert!(b.enclosed);
        // the sampled shell peak lies within one pitch of R
        let sampled_peak_min = u0 * (-(0.1f64 * 3f64.sqrt() / 2.0).powi(2) / (s * s)).exp();
        assert!(b.barrier_energy <= u0 + b.step);
        assert!(b.barrier_energy >= sampled_peak_min - b.step);
        assert!((b.saddle_position.norm() - r0).abs() < 0.2);
    }

    #[test]
    fn parallel_matches_serial() {
        let g = Geometry::from_spec(&VolumeSpec::new([24, 20, 16], [1.0; 3]));
        let pot = PotentialGrid::from_fn(g, |p| {
            p.norm_squared() + 3.0 * (p.x * 0.7).sin() * (p.y * 1.3).cos() + 2.0 * (p.z * 0.9).sin()
        });
        let c = Vec3::new(0.0, 0.0, 0.0);
        assert_eq!(escape_barrier(&pot, &c), escape_barrier_parallel(&pot, &c));
    }

    #[test]
    fn region_stays_off_boundary_below_barrier() {
        let g = Geometry::from_spec(&VolumeSpec::new([20, 20, 20], [0.1; 3]));
        let pot = PotentialGrid::from_fn(g, |p| p.norm_squared() * (1.0 + p.x));
        let b = escape_barrier(&pot, &Vec3::zeros());
        let region = sub_barrier_region(&pot, &Vec3::zeros(), b.enclosed_threshold);
        assert!(!region.is_empty());
        assert!(region.iter().all(|&n| !g.on_boundary(g.unindex(n))));
    }
}
