use thiserror::Error;

use crate::frames::CurrentDq;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "flux inversion did not converge for i = {current:?} A \
         (residual {residual:.3e} A after {iterations} iterations)"
    )]
    InversionFailed {
        current: CurrentDq,
        residual: f64,
        iterations: usize,
    },

    #[error("integration produced a non-finite state at t = {t} s")]
    IntegrationFailure { t: f64 },

    #[error("series too short: {len} samples, at least {needed} required")]
    SeriesTooShort { len: usize, needed: usize },

    #[error("sampling mismatch: {0}")]
    Sampling(String),

    #[error("rank-deficient regressor: {0}")]
    RankDeficient(String),

    #[error("no qualifying constant-current plateau in series")]
    NoPlateau,

    #[error("no sample with |i| <= {tolerance} A available for anchoring")]
    NoAnchor { tolerance: f64 },

    #[error("non-physical saliency fit: {0}")]
    NonPhysical(String),

    #[error("insufficient overlap between maps: {coverage:.1}% covered, 50% required")]
    InsufficientOverlap { coverage: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
