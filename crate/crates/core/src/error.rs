//! Error types for the crate.

use thiserror::Error;

/// Errors from sphere-geometry constructors and chart operations.
#[derive(Debug, Clone, Error)]
pub enum GeometryError {
    #[error("coordinate vector has norm {norm} which is not 1 within {tol}")]
    NotUnitNorm { norm: f64, tol: f64 },
    #[error("cannot normalize a (near-)zero vector, norm {0}")]
    ZeroVector(f64),
    #[error("ambient dimension {got} invalid: need at least {min} coordinates")]
    AmbientTooSmall { got: usize, min: usize },
    #[error("operation requires the 2-sphere, got a point on S^{0}")]
    NotTwoSphere(usize),
}

/// Errors raised while constructing an endomorphism.
#[derive(Debug, Clone, Error)]
pub enum MapError {
    #[error("map degree must be at least 2, got {0}")]
    DegreeTooLow(u32),
    #[error("denominator polynomial is identically zero")]
    ZeroDenominator,
    #[error(
        "numerator and denominator share a common factor \
         (normalized resultant magnitude {magnitude:.3e} below {tol:.0e})"
    )]
    CommonFactor { magnitude: f64, tol: f64 },
    #[error("stretch factor must be an odd integer >= 3, got {0}")]
    BadStretchFactor(u32),
    #[error("degree measurement disagreed across targets: saw counts {0:?}")]
    InconsistentDegree(Vec<u32>),
}

/// Errors from complete preimage solving.
#[derive(Debug, Clone, Error)]
pub enum PreimageError {
    #[error(
        "root finding did not converge at the target (worst scaled residual \
         {residual:.3e}, {converged}/{total} roots converged)"
    )]
    NonConvergence {
        residual: f64,
        converged: usize,
        total: usize,
    },
    #[error("preimage local indices sum to {got}, expected degree {expected}")]
    IndexSumMismatch { got: u32, expected: u32 },
    #[error("preimage {point:?} maps {residual:.3e} away from the target")]
    ForwardResidual { point: Vec<f64>, residual: f64 },
}

/// Errors from measure construction or deserialization.
#[derive(Debug, Clone, Error)]
pub enum MeasureError {
    #[error("a measure needs at least one atom")]
    Empty,
    #[error("total mass {mass} differs from 1 by more than {tol}")]
    MassNotNormalized { mass: f64, tol: f64 },
    #[error("atom {index} has non-finite or negative weight {weight}")]
    BadWeight { index: usize, weight: f64 },
    #[error("atom {index} has {got} coordinates, expected {expected}")]
    MixedDimensions {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A preimage-solver failure tagged with where in the pullback it happened.
#[derive(Debug, Clone, Error)]
#[error("pullback failed at level {level} on atom {atom_index} at {atom:?}: {source}")]
pub struct PullbackError {
    pub level: usize,
    pub atom_index: usize,
    pub atom: Vec<f64>,
    #[source]
    pub source: PreimageError,
}
