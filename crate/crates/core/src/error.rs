use thiserror::Error;

use crate::fit::FitError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Top-level error, one variant family per module.
#[derive(Debug, Error)]
pub enum Error {
    #[error("optics: {0}")]
    Optics(#[from] crate::optics::OpticsError),
    #[error("trap: {0}")]
    Trap(#[from] crate::trap::TrapError),
    #[error("dynamics: {0}")]
    Dynamics(#[from] crate::dynamics::DynamicsError),
    #[error("coherence: {0}")]
    Coherence(#[from] crate::coherence::CoherenceError),
    #[error("fit: {0}")]
    Fit(#[from] FitError),
    #[error("volume file: {0}")]
    Ivol(#[from] crate::ivol::IvolError),
}

impl Error {
    /// True when the failure is a curve-fit failure rather than a model error.
    pub fn is_fit_failure(&self) -> bool {
        matches!(self, Error::Fit(_))
    }
}
