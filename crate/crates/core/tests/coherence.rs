use std::f64::consts::PI;

use bbt_core::coherence::{
    echo_scan, evolve_pulse, free_evolution, motional_phase, ramsey_scan, zeeman_detuning, ContrastCurve, DephasingModel, NoiseModel,
    QubitState, ScanParams, Segment, SegmentKind, DEFAULT_ETA,
};
use bbt_core::constants::{HBAR, K_B};
use bbt_core::dynamics::{integrate_trajectory, AtomState, Integrator, LossModel};
use bbt_core::fit::fit_exponential;
use bbt_core::rng::{stream, Family};
use bbt_core::trap::{AtomSpecies, Interpolation};
use bbt_core::Vec3;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

mod common;

use common::capped_harmonic;

const RABI: f64 = 2.0 * PI * 1e6;

fn state(a: Complex64, b: Complex64) -> QubitState {
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    QubitState { c0: a / n, c1: b / n }
}

/// Classical RK4 on `i·dc/dt = ½·M·c` with constant drive.
fn rk4(initial: &QubitState, omega: f64, delta: f64, phase: f64, duration: f64, steps: usize) -> QubitState {
    let off = Complex64::from_polar(omega, -phase);
    let i = Complex64::i();
    let rhs = |c: [Complex64; 2]| -> [Complex64; 2] {
        [
            -i * 0.5 * (-delta * c[0] + off * c[1]),
            -i * 0.5 * (off.conj() * c[0] + delta * c[1]),
        ]
    };
    let h = duration / steps as f64;
    let mut c = [initial.c0, initial.c1];
    let axpy = |c: [Complex64; 2], k: [Complex64; 2], s: f64| [c[0] + k[0] * s, c[1] + k[1] * s];
    for _ in 0..steps {
        let k1 = rhs(c);
        let k2 = rhs(axpy(c, k1, 0.5 * h));
        let k3 = rhs(axpy(c, k2, 0.5 * h));
        let k4 = rhs(axpy(c, k3, h));
        for n in 0..2 {
            c[n] += (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n]) * (h / 6.0);
        }
    }
    QubitState { c0: c[0], c1: c[1] }
}

#[test]
fn detuned_pulse_matches_runge_kutta() {
    let omega = RABI;
    for tau in [0.2e-6, 0.5e-6, 1.3e-6] {
        let seg = Segment {
            kind: SegmentKind::Pulse,
            rabi_frequency: omega,
            detuning: omega,
            duration: tau,
            phase: 0.0,
        };
        let exact = evolve_pulse(&QubitState::one(), &seg, 0.0);
        let oracle = rk4(&QubitState::one(), omega, omega, 0.0, tau, 100_000);
        let closed = 0.5 * (2f64.sqrt() * omega * tau / 2.0).sin().powi(2);
        assert!((exact.p0() - oracle.p0()).abs() < 1e-6);
        assert!((exact.p0() - closed).abs() < 1e-12);
        assert!((exact.c0 - oracle.c0).norm() < 1e-6 && (exact.c1 - oracle.c1).norm() < 1e-6);
    }
}

#[test]
fn phased_pulse_and_extra_detuning_match_runge_kutta() {
    let start = state(Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.9));
    let seg = Segment {
        kind: SegmentKind::Pulse,
        rabi_frequency: RABI,
        detuning: -0.4 * RABI,
        duration: 0.7e-6,
        phase: 1.1,
    };
    let extra = 0.15 * RABI;
    let exact = evolve_pulse(&start, &seg, extra);
    let oracle = rk4(&start, RABI, -0.4 * RABI + extra, 1.1, 0.7e-6, 100_000);
    assert!((exact.c0 - oracle.c0).norm() < 1e-6 && (exact.c1 - oracle.c1).norm() < 1e-6);
}

#[test]
fn two_pi_pulse_is_identity_up_to_phase() {
    let start = state(Complex64::new(0.6, -0.2), Complex64::new(0.1, 0.7));
    let out = evolve_pulse(&start, &Segment::pulse(RABI, 2.0 * PI, 0.4), 0.0);
    assert!((out.fidelity(&start) - 1.0).abs() < 1e-9);
}

#[test]
fn zeeman_shift_of_one_percent_gauss_is_12_8_hz() {
    let sp = AtomSpecies::cesium();
    let (bias, db) = (1.5e-4, 1e-6);
    let nu = zeeman_detuning(bias, db, &sp) / (2.0 * PI);
    let first_order = 2.0 * sp.quadratic_zeeman_coeff * bias * db;
    let exact = sp.quadratic_zeeman_coeff * ((bias + db).powi(2) - bias * bias);
    assert!((nu - exact).abs() < 1e-9 * exact);
    assert!((first_order - 12.8).abs() < 0.05);
    assert!((nu / first_order - 1.0).abs() < db / bias * 0.6);
    assert_eq!(zeeman_detuning(bias, 0.0, &sp), 0.0);
    assert_eq!(zeeman_detuning(bias, db, &sp), zeeman_detuning(-bias, -db, &sp));
}

fn motional_model() -> DephasingModel {
    DephasingModel {
        eta_differential: DEFAULT_ETA,
        field_noise_rms: 0.0,
        raman_contrast_c0: 1.0,
        ..DephasingModel::default()
    }
}

/// Harmonic-trap contrast when each atom's mean potential energy is half
/// its Gamma(3, kT) distributed total: `(1 + (t/T*)²)^(−3/2)`, `T* = 2ħ/(η kT)`.
fn harmonic_contrast(t: f64, eta: f64, temperature: f64) -> f64 {
    let t_star = 2.0 * HBAR / (eta * K_B * temperature);
    (1.0 + (t / t_star).powi(2)).powf(-1.5)
}

fn scan(temperature: f64, td: Vec<f64>, n_atoms: usize) -> ScanParams {
    ScanParams {
        td_values: td,
        n_atoms,
        temperature,
        ..ScanParams::default()
    }
}

fn harmonic_ramsey(temperature: f64, td: Vec<f64>, n_atoms: usize, seed: u64) -> ContrastCurve {
    let (pot, report, _) = capped_harmonic();
    ramsey_scan(
        &scan(temperature, td, n_atoms),
        &pot,
        &report,
        &AtomSpecies::cesium(),
        &motional_model(),
        seed,
    )
    .unwrap()
}

#[test]
fn motional_dephasing_matches_harmonic_oracle() {
    let td: Vec<f64> = (0..12).map(|i| i as f64 * 10e-3).collect();
    let n = 600;
    let curve = harmonic_ramsey(4e-6, td, n, 1);
    for (&t, &c) in curve.td.iter().zip(&curve.contrast) {
        let oracle = harmonic_contrast(t, DEFAULT_ETA, 4e-6);
        // spread of |⟨e^{iφ}⟩| over n atoms
        let sigma = ((1.0 - oracle * oracle) / (2.0 * n as f64)).sqrt();
        assert!((c - oracle).abs() < 4.0 * sigma + 1e-3, "t = {t}: {c} vs {oracle}");
    }
}

#[test]
fn motional_coherence_time_halves_when_temperature_doubles() {
    let td: Vec<f64> = (0..23).map(|i| i as f64 * 5e-3).collect();
    let cold = harmonic_ramsey(4e-6, td.clone(), 400, 2);
    let hot = harmonic_ramsey(8e-6, td, 400, 2);
    let ratio = cold.one_over_e_time().unwrap() / hot.one_over_e_time().unwrap();
    assert!((ratio / 2.0 - 1.0).abs() < 0.15, "ratio {ratio}");
}

#[test]
fn all_dephasing_off_keeps_full_contrast() {
    let (pot, report, _) = capped_harmonic();
    let params = scan(4e-6, (0..12).map(|i| i as f64 * 10e-3).collect(), 100);
    let c = ramsey_scan(&params, &pot, &report, &AtomSpecies::cesium(), &DephasingModel::off(), 0).unwrap();
    assert!(c.contrast.iter().all(|&v| (v - 1.0).abs() < 1e-9));
}

#[test]
fn zero_delay_contrast_is_raman_c0_and_no_decay_without_dephasing() {
    let (pot, report, _) = capped_harmonic();
    let model = DephasingModel {
        eta_differential: 0.0,
        field_noise_rms: 0.0,
        ..DephasingModel::default()
    };
    let params = scan(4e-6, (0..12).map(|i| i as f64 * 10e-3).collect(), 400);
    let c = ramsey_scan(&params, &pot, &report, &AtomSpecies::cesium(), &model, 3).unwrap();
    assert!(
        (c.contrast[0] - 0.9).abs() < 3.0 * c.stderr[0] + 0.01,
        "{} ± {}",
        c.contrast[0],
        c.stderr[0]
    );
    let fit = c.fit().unwrap();
    assert!(fit.tau > 0.11);
}

fn quasi_static_only() -> DephasingModel {
    DephasingModel {
        eta_differential: 0.0,
        ..DephasingModel::default()
    }
}

#[test]
fn echo_refocuses_quasi_static_noise() {
    let (pot, report, _) = capped_harmonic();
    let sp = AtomSpecies::cesium();
    let params = scan(4e-6, (0..12).map(|i| i as f64 * 10e-3).collect(), 200);
    let echo = echo_scan(&params, &pot, &report, &sp, &quasi_static_only(), 4).unwrap();
    let ramsey = ramsey_scan(&params, &pot, &report, &sp, &quasi_static_only(), 4).unwrap();
    let c0 = echo.contrast[0];
    for i in 0..echo.td.len() {
        // a jittered π pulse leaves a small unrefocused part that still dephases;
        // at C0 = 0.9 the fully dephased echo settles near 0.94·C0
        assert!(
            echo.contrast[i] > 0.9 * c0 - 3.0 * echo.stderr[i],
            "td {}: {}",
            echo.td[i],
            echo.contrast[i]
        );
        let se = echo.stderr[i].hypot(ramsey.stderr[i]);
        assert!(
            echo.contrast[i] >= ramsey.contrast[i] - 3.0 * se,
            "td {}: echo {} ramsey {} se {se}",
            echo.td[i],
            echo.contrast[i],
            ramsey.contrast[i]
        );
    }
    assert!(ramsey.contrast.last().unwrap() < &(0.5 * c0));

    let exact = DephasingModel {
        raman_contrast_c0: 1.0,
        ..quasi_static_only()
    };
    let echo = echo_scan(&params, &pot, &report, &sp, &exact, 4).unwrap();
    for (td, c) in echo.td.iter().zip(&echo.contrast) {
        assert!((c - 1.0).abs() < 1e-9, "td {td}: {c}");
    }
}

#[test]
fn echo_outlasts_ramsey_with_motion_and_field_noise() {
    let (pot, report, _) = capped_harmonic();
    let sp = AtomSpecies::cesium();
    let params = scan(4e-6, (0..12).map(|i| i as f64 * 10e-3).collect(), 200);
    for model in [
        DephasingModel::default(),
        DephasingModel {
            noise_model: NoiseModel::OuProcess { correlation_time: 1e-3 },
            ..DephasingModel::default()
        },
    ] {
        let ramsey = ramsey_scan(&params, &pot, &report, &sp, &model, 6).unwrap().fit().unwrap();
        let echo = echo_scan(&params, &pot, &report, &sp, &model, 6).unwrap().fit().unwrap();
        assert!(
            echo.tau > ramsey.tau,
            "{:?}: echo {} ramsey {}",
            model.noise_model,
            echo.tau,
            ramsey.tau
        );
    }
}

/// Echo contrast of OU field noise by direct fine-step integration
/// (step τc/2000), independent of the library's noise generator.
fn ou_echo_oracle(td: f64, sigma: f64, tau: f64, bias: f64, shots: usize, rng: &mut ChaCha8Rng) -> f64 {
    let sp = AtomSpecies::cesium();
    if td == 0.0 {
        return 1.0;
    }
    let steps = ((td / (tau / 2000.0)).ceil() as usize).max(2) & !1;
    let dt = td / steps as f64;
    let a = (-dt / tau).exp();
    let kick = Normal::new(0.0, sigma * (1.0 - a * a).sqrt()).unwrap();
    let (mut re, mut im) = (0.0, 0.0);
    for _ in 0..shots {
        let mut b = sigma * Distribution::<f64>::sample(&StandardNormal, rng);
        let mut phase = 0.0;
        for n in 0..steps {
            let sign = if n < steps / 2 { 1.0 } else { -1.0 };
            let b_next = a * b + kick.sample(rng);
            let w = 0.5 * (zeeman_detuning(bias, b, &sp) + zeeman_detuning(bias, b_next, &sp));
            phase += sign * w * dt;
            b = b_next;
        }
        re += phase.cos();
        im += phase.sin();
    }
    re.hypot(im) / shots as f64
}

#[test]
fn ou_echo_matches_fine_step_oracle() {
    let (pot, report, _) = capped_harmonic();
    let sp = AtomSpecies::cesium();
    let model = DephasingModel {
        eta_differential: 0.0,
        field_noise_rms: 3e-6,
        noise_model: NoiseModel::OuProcess { correlation_time: 1e-3 },
        raman_contrast_c0: 1.0,
        ..DephasingModel::default()
    };
    let td: Vec<f64> = (0..7).map(|i| i as f64 * 8e-3).collect();
    let params = scan(4e-6, td.clone(), 200);
    let echo = echo_scan(&params, &pot, &report, &sp, &model, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let shots = 1600;
    for (i, &t) in td.iter().enumerate() {
        let oracle = ou_echo_oracle(t, 3e-6, 1e-3, model.bias_field, shots, &mut rng);
        let spread = ((1.0 - oracle * oracle).max(0.0) / (2.0 * shots as f64)).sqrt();
        let tol = 4.0 * echo.stderr[i].hypot(spread) + 0.01;
        assert!((echo.contrast[i] - oracle).abs() < tol, "td {t}: {} vs {oracle}", echo.contrast[i]);
    }
    let fit = echo.fit().unwrap();
    assert!(fit.tau.is_finite() && fit.tau > 0.0);
}

#[test]
fn exponential_fit_covers_truth_in_95_of_100_seeds() {
    let x: Vec<f64> = (0..12).map(|i| i as f64 * 10e-3).collect();
    let (a, tau, sigma) = (0.9, 43e-3, 0.02);
    let covered = (0..100)
        .filter(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise = Normal::new(0.0, sigma).unwrap();
            let y: Vec<f64> = x.iter().map(|&t| a * (-t / tau).exp() + noise.sample(&mut rng)).collect();
            let fit = fit_exponential(&x, &y, &vec![sigma; x.len()]).unwrap();
            (fit.tau - tau).abs() <= 3.0 * fit.tau_stderr
        })
        .count();
    assert!(covered >= 95, "{covered}/100");
}

#[test]
fn pinned_atom_at_null_accumulates_no_phase() {
    let (pot, _, mass) = capped_harmonic();
    let pinned = AtomState::new(Vec3::zeros(), Vec3::zeros(), mass, &pot, Interpolation::default()).unwrap();
    let integ = Integrator::for_trap(mass, common::OMEGA);
    let mut record = Vec::new();
    let mut rng = stream(0, Family::Trajectory, 0);
    integrate_trajectory(pinned, &pot, &integ, 1000, &LossModel::none(), None, &mut rng, |_, _, u| {
        record.push(u)
    })
    .unwrap();
    assert_eq!(motional_phase(&record, integ.dt, DEFAULT_ETA, common::OMEGA).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn segments_preserve_norm(
        omega in 0.0f64..1e7, delta in -1e7f64..1e7, t in 0.0f64..1e-5, phase in -PI..PI,
        re in -1.0f64..1.0, im in -1.0f64..1.0, free in -100.0f64..100.0,
    ) {
        let s = state(Complex64::new(re, im), Complex64::new(0.5, -0.3));
        let seg = Segment { kind: SegmentKind::Pulse, rabi_frequency: omega, detuning: delta, duration: t, phase };
        prop_assert!((evolve_pulse(&s, &seg, 0.0).norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert!((evolve_pulse(&s, &Segment::delay(t), delta).norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert!((free_evolution(&s, free).norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_half_pi_pulses_compose_to_pi(
        phase in -PI..PI, omega in 1e5f64..1e7, re in -1.0f64..1.0, im in -1.0f64..1.0,
    ) {
        let s = state(Complex64::new(re, im), Complex64::new(-0.4, 0.2));
        let half = Segment::pulse(omega, PI / 2.0, phase);
        let twice = evolve_pulse(&evolve_pulse(&s, &half, 0.0), &half, 0.0);
        let once = evolve_pulse(&s, &Segment::pulse(omega, PI, phase), 0.0);
        prop_assert!((twice.fidelity(&once) - 1.0).abs() < 1e-12);
    }
}
