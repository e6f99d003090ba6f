use bbt_web::{rabi_transfer, DemoTrap};

#[test]
fn default_trap_is_enclosed_and_sized_like_the_reference() {
    let trap = DemoTrap::build(3.5, 0.24, 58.0).unwrap();
    let rep = trap.report();
    assert!(rep.enclosed);
    let barrier = rep.barrier_uk();
    assert!((150.0..300.0).contains(&barrier), "{barrier}");
    assert!((rep.size_transverse * 1e6 - 2.25).abs() < 0.5, "{}", rep.size_transverse);
    assert!((rep.size_axial * 1e6 - 42.7).abs() < 8.0, "{}", rep.size_axial);
    assert_eq!(trap.slice().len(), trap.slice_width() * trap.slice_height());
}

#[test]
fn barrier_scales_with_power() {
    let low = DemoTrap::build(3.5, 0.12, 58.0).unwrap().report().barrier_uk();
    let high = DemoTrap::build(3.5, 0.24, 58.0).unwrap().report().barrier_uk();
    assert!((high / low - 2.0).abs() < 0.05, "{low} {high}");
}

#[test]
fn resonant_pi_pulse_transfers_fully_without_jitter() {
    let p = rabi_transfer(&[0.0, 0.25, 0.5], 1.0, 0.0, 1.0, 2, 1).unwrap();
    assert!(p[0].abs() < 1e-12);
    assert!((p[1] - 0.5).abs() < 1e-9);
    assert!((p[2] - 1.0).abs() < 1e-9);
}

#[test]
fn echo_outlasts_ramsey() {
    let trap = DemoTrap::build(3.5, 0.24, 58.0).unwrap();
    let (ramsey, echo) = trap.contrast_curves(&[0.0, 20.0], true, 20.0, 1.0, 0.9, 100, 3).unwrap();
    assert!((ramsey[0] - echo[0]).abs() < 0.05);
    assert!(echo[1] > ramsey[1], "{ramsey:?} {echo:?}");
}

#[test]
fn bad_inputs_are_errors() {
    assert!(DemoTrap::build(-1.0, 0.24, 58.0).is_err());
    assert!(rabi_transfer(&[0.1], 1.0, 0.0, 0.4, 10, 1).is_err());
}

#[test]
fn magnetic_noise_alone_is_refocused() {
    let trap = DemoTrap::build(3.5, 0.24, 58.0).unwrap();
    let (ramsey, echo) = trap.contrast_curves(&[0.0, 4.0], false, 20.0, 5.0, 1.0, 200, 5).unwrap();
    assert!(ramsey[1] < 0.5, "{ramsey:?}");
    assert!((echo[1] - 1.0).abs() < 1e-9, "{echo:?}");
}
