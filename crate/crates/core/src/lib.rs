//! Equilibrium measures of quasiregular sphere endomorphisms.
//!
//! The crate computes the equilibrium measure of a degree-`d` endomorphism of
//! the round sphere Sⁿ as the weak limit of normalized iterated pullbacks
//! `(fᵏ)*δ_a / dᵏ` of point masses, and provides the statistics needed to
//! check its characteristic properties numerically: equidistribution of
//! preimages, balancedness (`f*μ = d·μ`) and invariance (`f_*μ = μ`),
//! non-atomicity, agreement of the support with the Julia set, strong mixing,
//! the `d^{-k/n}` convergence rate, and Riesz-capacity bounds on the sets of
//! seeds that deviate from equidistribution.
//!
//! Module map:
//! - [`sphere`]: points on Sⁿ, chordal metric, stereographic chart for S²,
//!   uniform sampling, Fibonacci lattices.
//! - [`poly`]: complex polynomials and a simultaneous-iteration
//!   (Aberth–Ehrlich) root solver with multiplicity clustering.
//! - [`endo`]: the endomorphism abstraction (forward evaluation, complete
//!   preimage solving with local indices) and rational maps on S².
//! - [`zorich`] (feature `zorich`): a power-type quasiregular map on S³ built
//!   from a square-beam decomposition of 3-space.
//! - [`measure`]: finitely supported probability measures, atom merging,
//!   moment helpers, serialization.
//! - [`pullback`]: normalized pullback and pushforward of measures, iterated
//!   pullback with optional multinomial resampling, volume-form pullbacks.
//! - [`harmonics`]: real spherical harmonics on S² and hyperspherical
//!   harmonics on S³ as the smooth test dictionary, with gradient constants.
//! - [`potential`]: Riesz 1-potentials, discrete energies, equilibrium
//!   weights and capacities of point sets, deviation-set experiments.
//! - [`stats`]: weak distances, balance/invariance residuals, atom scans,
//!   exceptional-point search, support-vs-Julia comparison, mixing
//!   correlations, convergence-rate fits.
//! - [`julia`]: independent Julia-set references (escape-time distance
//!   estimator for polynomials, backward orbits from repelling fixed points).

pub mod error;
pub mod harmonics;
pub mod julia;
pub mod measure;
pub mod poly;
pub mod potential;
pub mod pullback;
pub mod quadrature;
pub mod rng;
pub mod sphere;
pub mod stats;
pub mod tolerances;

pub mod endo;
#[cfg(feature = "zorich")]
pub mod zorich;

pub use endo::{Descriptor, Endomorphism, PreimageAtom, PreimageSet, RationalMap};
pub use error::{GeometryError, MapError, MeasureError, PreimageError, PullbackError};
pub use harmonics::{Observable, TestDictionary};
pub use measure::{DiscreteMeasure, WeightedAtom};
pub use potential::{CapacityReport, DeviationSetReport};
pub use pullback::{PruneStrategy, PullbackConfig};
pub use sphere::{ChartPoint, SpherePoint};
pub use stats::ConvergenceReport;
#[cfg(feature = "zorich")]
pub use zorich::ZorichPowerMap;
