//! Simulation library for a crossed-vortex bottle beam trap (BBT) holding
//! single Cs atoms.
//!
//! The crate is split along the physical pipeline:
//!
//! * [`optics`]: Laguerre-Gauss vortex fields, spiral phase plate, angular
//!   spectrum propagation and the crossed two-beam intensity volume.
//! * [`trap`]: sum-over-lines polarizability, trapping potential, minimum
//!   search, escape barrier (watershed bisection), trap frequencies.
//! * [`dynamics`]: thermal sampling, velocity-Verlet trajectories, loading,
//!   photon-count histograms and retention.
//! * [`coherence`]: two-level qubit evolution, Ramsey/echo scans with
//!   motional and quadratic-Zeeman dephasing.
//! * [`fit`]: weighted exponential least squares shared by retention and
//!   coherence fits.
//!
//! Every stochastic routine takes an explicit seed and derives one
//! counter-based ChaCha stream per work unit, so results do not depend on
//! the number of rayon worker threads.

// `!(x > 0.0)` is used throughout so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coherence;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod grid;
pub mod ivol;
pub mod optics;
pub mod rng;
pub mod trap;

pub use error::{Error, Result};
pub use grid::{Vec3, VolumeSpec};
