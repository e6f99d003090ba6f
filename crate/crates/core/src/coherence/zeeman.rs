use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::trap::AtomSpecies;

/// Clock-transition shift from the quadratic Zeeman effect when the field
/// along the bias changes from `bias` to `bias + field_sample`, rad/s.
pub fn zeeman_detuning(bias: f64, field_sample: f64, species: &AtomSpecies) -> f64 {
    let total = bias + field_sample;
    2.0 * std::f64::consts::PI * species.quadratic_zeeman_coeff * (total * total - bias * bias)
}

/// Accumulated Zeeman phase of one stationary Ornstein-Uhlenbeck field
/// record (rms `sigma`, correlation time `tau`), read at each of the sorted
/// `checkpoints`. The field is advanced with the exact OU update on steps of
/// at most `tau/20` and integrated with the trapezoid rule.
pub fn ou_phase_checkpoints(checkpoints: &[f64], bias: f64, sigma: f64, tau: f64, species: &AtomSpecies, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let end = checkpoints.iter().copied().fold(0.0, f64::max);
    let mut out = vec![0.0; checkpoints.len()];
    let mut b: f64 = sigma * rng.sample::<f64, _>(StandardNormal);
    if end <= 0.0 || sigma == 0.0 {
        return out;
    }
    let steps = (end / (tau / 20.0)).ceil().max(1.0) as usize;
    let dt = end / steps as f64;
    let decay = (-dt / tau).exp();
    let kick = sigma * (1.0 - decay * decay).sqrt();
    let mut phase = 0.0;
    let mut w = zeeman_detuning(bias, b, species);
    let mut next = 0;
    while next < checkpoints.len() && checkpoints[next] <= 0.0 {
        next += 1;
    }
    for n in 1..=steps {
        b = b * decay + kick * rng.sample::<f64, _>(StandardNormal);
        let w_new = zeeman_detuning(bias, b, species);
        let prev = phase;
        phase += 0.5 * (w + w_new) * dt;
        let t = n as f64 * dt;
        while next < checkpoints.len() && checkpoints[next] <= t + 1e-12 * end {
            let frac = ((checkpoints[next] - (t - dt)) / dt).clamp(0.0, 1.0);
            out[next] = prev + frac * (phase - prev);
            next += 1;
        }
        w = w_new;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_zero_shift() {
        assert_eq!(zeeman_detuning(1.5e-4, 0.0, &AtomSpecies::cesium()), 0.0);
    }

    #[test]
    fn first_order_expansion() {
        let sp = AtomSpecies::cesium();
        let (b, db) = (1.5e-4, 1e-6);
        let exact = zeeman_detuning(b, db, &sp) / (2.0 * std::f64::consts::PI);
        let linear = 2.0 * sp.quadratic_zeeman_coeff * b * db;
        assert!((exact - 12.8).abs() < 0.1, "{exact}");
        assert!((exact - linear).abs() / linear < db / b * 1.01);
    }

    #[test]
    fn even_in_total_field() {
        let sp = AtomSpecies::cesium();
        // B_total = +2e-4 versus −2e-4 about the same bias
        let a = zeeman_detuning(1.5e-4, 0.5e-4, &sp);
        let b = zeeman_detuning(1.5e-4, -3.5e-4, &sp);
        assert!((a - b).abs() < 1e-9 * a.abs());
    }
}
