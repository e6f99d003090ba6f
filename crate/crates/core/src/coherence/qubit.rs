use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    pub c0: Complex64,
    pub c1: Complex64,
}

impl QubitState {
    pub fn zero() -> Self {
        Self {
            c0: Complex64::new(1.0, 0.0),
            c1: Complex64::new(0.0, 0.0),
        }
    }

    pub fn one() -> Self {
        Self {
            c0: Complex64::new(0.0, 0.0),
            c1: Complex64::new(1.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }

    pub fn p0(&self) -> f64 {
        self.c0.norm_sqr()
    }

    pub fn p1(&self) -> f64 {
        self.c1.norm_sqr()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        (self.c0.conj() * other.c0 + self.c1.conj() * other.c1).norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Pulse,
    Delay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    /// rad/s; ignored for delays.
    pub rabi_frequency: f64,
    /// Drive detuning, rad/s.
    pub detuning: f64,
    /// s
    pub duration: f64,
    /// Drive phase, rad.
    #[serde(default)]
    pub phase: f64,
}

impl Segment {
    /// Resonant pulse of area `area` (rad) at Rabi frequency `omega`.
    pub fn pulse(omega: f64, area: f64, phase: f64) -> Self {
        Self {
            kind: SegmentKind::Pulse,
            rabi_frequency: omega,
            detuning: 0.0,
            duration: area / omega,
            phase,
        }
    }

    pub fn delay(duration: f64) -> Self {
        Self {
            kind: SegmentKind::Delay,
            rabi_frequency: 0.0,
            detuning: 0.0,
            duration,
            phase: 0.0,
        }
    }
}

/// Exact evolution over one constant segment:
/// `U = cos(Wt/2)·1 − i·sin(Wt/2)/W·M`, `W = √(Ω² + Δ²)`, with `extra_detuning`
/// added to Δ.
pub fn evolve_pulse(state: &QubitState, segment: &Segment, extra_detuning: f64) -> QubitState {
    let omega = match segment.kind {
        SegmentKind::Pulse => segment.rabi_frequency,
        SegmentKind::Delay => 0.0,
    };
    let delta = segment.detuning + extra_detuning;
    let w = omega.hypot(delta);
    let half = 0.5 * w * segment.duration;
    let (s, c) = half.sin_cos();
    // sin(Wt/2)/W, finite as W → 0
    let sw = if w * segment.duration > 1e-8 {
        s / w
    } else {
        0.5 * segment.duration
    };
    let off = Complex64::from_polar(omega, -segment.phase);
    let i = Complex64::i();
    let u00 = Complex64::new(c, 0.0) + i * sw * delta;
    let u11 = Complex64::new(c, 0.0) - i * sw * delta;
    let u01 = -i * sw * off;
    let u10 = -i * sw * off.conj();
    QubitState {
        c0: u00 * state.c0 + u01 * state.c1,
        c1: u10 * state.c0 + u11 * state.c1,
    }
}

/// Free precession by an accumulated detuning phase `phase = ∫Δ dt`.
pub fn free_evolution(state: &QubitState, phase: f64) -> QubitState {
    QubitState {
        c0: state.c0 * Complex64::from_polar(1.0, 0.5 * phase),
        c1: state.c1 * Complex64::from_polar(1.0, -0.5 * phase),
    }
}

/// Ordered segments, as read from a sequence definition.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseSequence {
    pub segments: Vec<Segment>,
}

impl PulseSequence {
    pub fn validate(&self) -> Result<(), super::CoherenceError> {
        for (n, s) in self.segments.iter().enumerate() {
            if !(s.duration >= 0.0 && s.duration.is_finite()) || !s.rabi_frequency.is_finite() || !s.detuning.is_finite() {
                return Err(super::CoherenceError::InvalidScan(format!("segment {n}: {s:?}")));
            }
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Apply every segment with `extra_detuning` added during delays only.
    pub fn apply(&self, state: &QubitState, extra_detuning: f64) -> QubitState {
        self.segments.iter().fold(*state, |st, seg| {
            let extra = if seg.kind == SegmentKind::Delay { extra_detuning } else { 0.0 };
            evolve_pulse(&st, seg, extra)
        })
    }
}
