//! Error types shared across the solver.

use thiserror::Error;

/// Errors raised by the spectral operators, curve reconstruction and the
/// nonlinear wave maps. Domain-boundary events (`NotGraphlike`,
/// `SelfIntersecting`, `InnerCurveSelfIntersecting`) are recoverable from the
/// continuation driver's point of view: they mark the state as having left
/// the admissible set rather than a programming error.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WaveError {
    #[error("grid size must be even and at least 8, got {0}")]
    InvalidGrid(usize),

    #[error("operand has nonzero mean {0:.3e}; input must lie in the mean-zero subspace")]
    NonZeroMean(f64),

    #[error("curve is not graphlike: mean of cos(theta) = {0:.3e} is at or below the floor")]
    NotGraphlike(f64),

    #[error("curve nodes nearly coincide: min pairwise distance {0:.3e}")]
    SelfIntersecting(f64),

    #[error("inner curve failed the chord-arc check: infimum {0:.3e}")]
    InnerCurveSelfIntersecting(f64),

    #[error("evaluation point is too close to the curve: distance {0:.3e}")]
    TooCloseToCurve(f64),

    #[error("both densities are zero")]
    BothDensitiesZero,

    #[error("bifurcation speed is zero; the branch seed is undefined")]
    ZeroSpeed,

    #[error("invalid physical parameters: {0}")]
    InvalidParameters(String),
}

pub type Result<T> = std::result::Result<T, WaveError>;
