use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{binomial_estimate, CounterModel, DynamicsError};
use crate::rng::{stream, Family};

/// Modes whose estimated misclassification exceeds this are flagged.
pub const OVERLAP_LIMIT: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountHistogram {
    /// Counts recorded in each cycle, in cycle order.
    pub counts: Vec<u64>,
    /// `(count value, number of cycles)` for every value from min to max.
    pub bins: Vec<(u64, u64)>,
    /// Cycles with counts ≥ threshold are classified as one atom.
    pub threshold: u64,
    pub p1: f64,
    pub p1_stderr: f64,
    pub mean_dark: f64,
    pub mean_bright: f64,
    /// `(μ₁ − μ₀)/√(μ₀ + μ₁)`.
    pub separation: f64,
    /// Misclassification probability of the threshold under the fitted
    /// two-Poisson model.
    pub misclassification: f64,
    pub distinguishable: bool,
}

fn log_pmf_table(mu: f64, n_max: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max as usize + 1);
    if mu <= 0.0 {
        out.push(0.0);
        out.resize(n_max as usize + 1, f64::NEG_INFINITY);
        return out;
    }
    let mut lp = -mu;
    out.push(lp);
    for n in 1..=n_max {
        lp += (mu / n as f64).ln();
        out.push(lp);
    }
    out
}

/// Probability that a two-level Poisson mixture is misread by `threshold`:
/// `(1 − p1)·P(N ≥ t | μ₀) + p1·P(N < t | μ₁)`.
pub fn poisson_misclassification(mu0: f64, mu1: f64, threshold: u64, p1: f64) -> f64 {
    let below = |mu: f64| -> f64 {
        log_pmf_table(mu, threshold.saturating_sub(1))
            .iter()
            .take(threshold as usize)
            .map(|l| l.exp())
            .sum()
    };
    let false_bright = (1.0 - below(mu0)).max(0.0);
    let false_dark = below(mu1).min(1.0);
    (1.0 - p1) * false_bright + p1 * false_dark
}

fn split_means(counts: &[u64], t: u64) -> Option<(f64, f64, f64)> {
    let (mut n0, mut s0, mut n1, mut s1) = (0usize, 0.0, 0usize, 0.0);
    for &c in counts {
        if c < t {
            n0 += 1;
            s0 += c as f64;
        } else {
            n1 += 1;
            s1 += c as f64;
        }
    }
    (n0 > 0 && n1 > 0).then(|| (s0 / n0 as f64, s1 / n1 as f64, n1 as f64 / counts.len() as f64))
}

/// Otsu split of the count distribution.
fn otsu(counts: &[u64], lo: u64, hi: u64) -> Option<u64> {
    let mut best = None;
    let mut best_score = f64::NEG_INFINITY;
    for t in lo + 1..=hi {
        if let Some((m0, m1, w1)) = split_means(counts, t) {
            let score = (1.0 - w1) * w1 * (m1 - m0).powi(2);
            if score > best_score {
                best_score = score;
                best = Some(t);
            }
        }
    }
    best
}

/// Bayes threshold between two Poisson modes with mixing weight `p1`: the
/// first count where the bright mode becomes at least as likely.
fn valley(mu0: f64, mu1: f64, p1: f64) -> u64 {
    let n_max = (mu1 + 10.0 * mu1.sqrt() + 10.0).ceil() as u64;
    let l0 = log_pmf_table(mu0, n_max);
    let l1 = log_pmf_table(mu1, n_max);
    let (a, b) = ((1.0 - p1).ln(), p1.ln());
    (mu0.floor() as u64..=n_max)
        .find(|&n| b + l1[n as usize] >= a + l0[n as usize])
        .unwrap_or(n_max + 1)
}

/// Two-level classifier: an Otsu split seeds the mode means, then the
/// threshold moves to the valley of the fitted two-Poisson mixture.
pub fn classify_counts(counts: &[u64]) -> Result<CountHistogram, DynamicsError> {
    if counts.is_empty() {
        return Err(DynamicsError::InvalidParameter("no cycles".into()));
    }
    let lo = *counts.iter().min().unwrap();
    let hi = *counts.iter().max().unwrap();
    let mut bins: Vec<(u64, u64)> = (lo..=hi).map(|v| (v, 0)).collect();
    for &c in counts {
        bins[(c - lo) as usize].1 += 1;
    }

    let mean_all = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
    let mut threshold = hi + 1;
    let (mut mu0, mut mu1, mut w1) = (mean_all, mean_all, 0.0);
    if let Some(t) = otsu(counts, lo, hi) {
        threshold = t;
        for _ in 0..5 {
            let Some((m0, m1, p)) = split_means(counts, threshold) else {
                break;
            };
            (mu0, mu1, w1) = (m0, m1, p);
            let next = valley(mu0, mu1, w1).clamp(lo + 1, hi);
            if next == threshold {
                break;
            }
            threshold = next;
        }
        if let Some((m0, m1, p)) = split_means(counts, threshold) {
            (mu0, mu1, w1) = (m0, m1, p);
        }
    }

    let ones = counts.iter().filter(|&&c| c >= threshold).count();
    let (p1, p1_stderr) = binomial_estimate(ones, counts.len());
    let separation = if mu0 + mu1 > 0.0 { (mu1 - mu0) / (mu0 + mu1).sqrt() } else { 0.0 };
    let misclassification = if w1 > 0.0 {
        poisson_misclassification(mu0, mu1, threshold, w1)
    } else {
        1.0
    };
    Ok(CountHistogram {
        counts: counts.to_vec(),
        bins,
        threshold,
        p1,
        p1_stderr,
        mean_dark: mu0,
        mean_bright: mu1,
        separation,
        misclassification,
        distinguishable: misclassification < OVERLAP_LIMIT,
    })
}

/// Photon counts for each cycle's occupancy, then classification.
pub fn simulate_count_histogram(occupancy: &[u8], counter: &CounterModel, seed: u64) -> Result<CountHistogram, DynamicsError> {
    counter.validate()?;
    let counts: Vec<u64> = occupancy
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let mean = counter.mean_counts(n);
            if mean <= 0.0 {
                return 0;
            }
            let mut rng = stream(seed, Family::Counts, i as u64);
            Poisson::new(mean).map(|d| d.sample(&mut rng) as u64).unwrap_or(0)
        })
        .collect();
    classify_counts(&counts)
}
