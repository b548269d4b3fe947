//! Numerical thresholds shared across the crate.
//!
//! Every tolerance that appears in an invariant or a contract lives here with
//! a short note on its origin, so the constants are not scattered as magic
//! numbers.

/// Points must satisfy the unit-norm constraint to this absolute tolerance.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Chordal guard band around the projection pole; chart round-trips are only
/// guaranteed outside it (stereographic blowup).
pub const POLE_GUARD_BAND: f64 = 1e-8;

/// Chart round-trips (`project ∘ lift` and `lift ∘ project`) reproduce the
/// input to this chordal tolerance outside the guard band.
pub const CHART_ROUNDTRIP_TOL: f64 = 1e-10;

/// Coincident measure atoms are merged below this chordal distance. Kept
/// below the root-finder residual so merging never conflates genuinely
/// distinct preimages.
pub const ATOM_MERGE_TOL: f64 = 1e-9;

/// Total mass of a probability measure must equal 1 to this tolerance.
pub const MASS_TOL: f64 = 1e-12;

/// Every preimage atom must map forward onto its target within this chordal
/// distance.
pub const FORWARD_RESIDUAL_TOL: f64 = 1e-8;

/// Root estimates closer than this (relative to `1 + |z|`) are clustered into
/// a single root whose multiplicity is the cluster size. Matches the accuracy
/// floor `sqrt(eps)` of a double root in f64.
pub const ROOT_CLUSTER_RADIUS: f64 = 1e-7;

/// Scaled polynomial residual above which a root estimate counts as
/// non-converged and preimage solving fails loudly.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-8;

/// Residual band `(AMBIGUOUS_LO, AMBIGUOUS_HI)` in which root clustering is
/// considered ambiguous and the solver retries at a perturbed target.
pub const AMBIGUOUS_RESIDUAL_LO: f64 = 1e-7;
pub const AMBIGUOUS_RESIDUAL_HI: f64 = 1e-5;

/// Target perturbation used to disambiguate clustering at near-critical
/// values.
pub const CRITICAL_TARGET_PERTURBATION: f64 = 1e-9;

/// Distance below which a potential evaluation point is treated as lying on
/// an atom (the Riesz potential is reported as +inf there).
pub const POTENTIAL_COINCIDENCE_TOL: f64 = 1e-12;

/// Normalized numerator/denominator resultant magnitude below which a
/// rational map is rejected as having a common factor.
pub const RESULTANT_TOL: f64 = 1e-9;

/// Relative magnitude below which leading polynomial coefficients are
/// trimmed; the resulting degree drop of a preimage pencil is the local index
/// at infinity.
pub const LEAD_COEFF_TRIM: f64 = 1e-12;

/// Simplex-solver iteration cap for equilibrium-weight computations.
pub const EQUILIBRIUM_MAX_ITERS: usize = 100_000;
