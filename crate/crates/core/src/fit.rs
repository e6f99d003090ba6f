//! Weighted nonlinear least squares for `y = A·exp(−x/τ)`.
//!
//! The model is solved in the rate parameterisation `k = 1/τ` with
//! Levenberg-Marquardt, started from a weighted log-linear regression.
//! Uncertainties take the supplied sigmas as absolute: the covariance is
//! `(JᵀWJ)⁻¹` without rescaling by the reduced chi-square.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const MAX_ITER: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("x, y and sigma lengths differ ({x}, {y}, {sigma})")]
    LengthMismatch { x: usize, y: usize, sigma: usize },
    #[error("sigma must be positive and finite (index {0})")]
    InvalidSigma(usize),
    #[error("non-finite data at index {0}")]
    NonFinite(usize),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("normal matrix is singular")]
    Singular,
    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub amplitude: f64,
    pub amplitude_stderr: f64,
    /// Decay rate `1/τ`; zero or negative means no decay was resolved.
    pub rate: f64,
    pub rate_stderr: f64,
    /// `1/rate`, or infinity when the rate is not positive.
    pub tau: f64,
    pub tau_stderr: f64,
    /// Covariance of (amplitude, rate).
    pub covariance: [[f64; 2]; 2],
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
}

impl ExpFit {
    pub fn decays(&self) -> bool {
        self.rate > 0.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * (-self.rate * x).exp()
    }

    pub fn reduced_chi2(&self) -> f64 {
        if self.dof == 0 {
            f64::NAN
        } else {
            self.chi2 / self.dof as f64
        }
    }
}

fn cost(x: &[f64], y: &[f64], s: &[f64], p: Vector2<f64>) -> f64 {
    x.iter()
        .zip(y)
        .zip(s)
        .map(|((&x, &y), &s)| ((y - p[0] * (-p[1] * x).exp()) / s).powi(2))
        .sum()
}

fn normal_equations(x: &[f64], y: &[f64], s: &[f64], p: Vector2<f64>) -> (Matrix2<f64>, Vector2<f64>) {
    let mut jtj = Matrix2::zeros();
    let mut jtr = Vector2::zeros();
    for ((&x, &y), &s) in x.iter().zip(y).zip(s) {
        let e = (-p[1] * x).exp();
        let r = (y - p[0] * e) / s;
        let j = Vector2::new(e / s, -p[0] * x * e / s);
        jtj += j * j.transpose();
        jtr += j * r;
    }
    (jtj, jtr)
}

/// Weighted log-linear regression of `ln y` on `x` over the positive points.
fn initial_guess(x: &[f64], y: &[f64], s: &[f64]) -> Result<Vector2<f64>, FitError> {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut used = 0;
    for ((&x, &y), &s) in x.iter().zip(y).zip(s) {
        if y <= 0.0 {
            continue;
        }
        let w = (y / s).powi(2);
        let ly = y.ln();
        sw += w;
        sx += w * x;
        sy += w * ly;
        sxx += w * x * x;
        sxy += w * x * ly;
        used += 1;
    }
    if used < 2 {
        return Err(FitError::Degenerate("fewer than two positive values".into()));
    }
    let det = sw * sxx - sx * sx;
    if det.abs() <= f64::EPSILON * sw * sxx {
        return Err(FitError::Degenerate("all abscissae coincide".into()));
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / sw;
    Ok(Vector2::new(intercept.exp(), -slope))
}

/// Fit `y = A·exp(−x/τ)` with per-point standard deviations `sigma`.
pub fn fit_exponential(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<ExpFit, FitError> {
    if x.len() != y.len() || x.len() != sigma.len() {
        return Err(FitError::LengthMismatch {
            x: x.len(),
            y: y.len(),
            sigma: sigma.len(),
        });
    }
    if x.len() < 3 {
        return Err(FitError::TooFewPoints(x.len()));
    }
    if let Some(i) = (0..x.len()).find(|&i| !x[i].is_finite() || !y[i].is_finite()) {
        return Err(FitError::NonFinite(i));
    }
    if let Some(i) = sigma.iter().position(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(FitError::InvalidSigma(i));
    }

    let mut p = initial_guess(x, y, sigma)?;
    let mut c = cost(x, y, sigma, p);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        iterations += 1;
        let (jtj, jtr) = normal_equations(x, y, sigma, p);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj;
            a[(0, 0)] *= 1.0 + lambda;
            a[(1, 1)] *= 1.0 + lambda;
            let Some(step) = a.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let ct = cost(x, y, sigma, trial);
            if ct.is_finite() && ct <= c {
                let small =
                    step[0].abs() <= 1e-15 * trial[0].abs().max(1e-300) && step[1].abs() <= 1e-15 * trial[1].abs().max(1e-15 / x_span(x));
                let flat = c - ct <= 1e-15 * c.max(1e-300);
                p = trial;
                c = ct;
                lambda = (lambda * 0.1).max(1e-12);
                accepted = true;
                converged = small || flat;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step exists: already at the minimum to working precision
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(FitError::NonConvergence(iterations));
    }

    let (jtj, _) = normal_equations(x, y, sigma, p);
    let cov = jtj.try_inverse().ok_or(FitError::Singular)?;
    if !cov.iter().all(|v| v.is_finite()) {
        return Err(FitError::Singular);
    }
    let (amplitude, rate) = (p[0], p[1]);
    let rate_stderr = cov[(1, 1)].max(0.0).sqrt();
    let (tau, tau_stderr) = if rate > 0.0 {
        (1.0 / rate, rate_stderr / (rate * rate))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(ExpFit {
        amplitude,
        amplitude_stderr: cov[(0, 0)].max(0.0).sqrt(),
        rate,
        rate_stderr,
        tau,
        tau_stderr,
        covariance: [[cov[(0, 0)], cov[(0, 1)]], [cov[(1, 0)], cov[(1, 1)]]],
        chi2: c,
        dof: x.len() - 2,
        iterations,
    })
}

fn x_span(x: &[f64]) -> f64 {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    (hi - lo).max(f64::MIN_POSITIVE)
}
