//! Geometry of the round sphere Sⁿ ⊂ ℝⁿ⁺¹.
//!
//! Points are unit vectors in ambient coordinates, the metric is the ambient
//! chordal distance `‖a − b‖` (bi-Lipschitz equivalent to the geodesic
//! distance, closed-form and branch-free), and for n = 2 a stereographic
//! chart identifies S² with the extended complex plane.

use num_complex::Complex64;
use rand::RngExt;
use smallvec::SmallVec;

use crate::error::GeometryError;
use crate::rng::seeded_rng;
use crate::tolerances::UNIT_NORM_TOL;

/// Inline storage covers S² and S³ without heap traffic.
pub type Coords = SmallVec<[f64; 4]>;

/// A point on Sⁿ stored as a unit vector in ℝⁿ⁺¹.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    coords: Coords,
}

impl SpherePoint {
    /// Wrap a coordinate vector, requiring unit norm within `1e-12`.
    pub fn new(coords: impl Into<Coords>) -> Result<Self, GeometryError> {
        let coords = coords.into();
        if coords.len() < 3 {
            return Err(GeometryError::AmbientTooSmall {
                got: coords.len(),
                min: 3,
            });
        }
        let norm = norm(&coords);
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(GeometryError::NotUnitNorm {
                norm,
                tol: UNIT_NORM_TOL,
            });
        }
        Ok(Self { coords })
    }

    /// Normalize an arbitrary nonzero vector onto the sphere.
    pub fn normalized(coords: impl Into<Coords>) -> Result<Self, GeometryError> {
        let mut coords = coords.into();
        if coords.len() < 3 {
            return Err(GeometryError::AmbientTooSmall {
                got: coords.len(),
                min: 3,
            });
        }
        let norm = norm(&coords);
        if !norm.is_finite() || norm < 1e-300 {
            return Err(GeometryError::ZeroVector(norm));
        }
        for c in coords.iter_mut() {
            *c /= norm;
        }
        Ok(Self { coords })
    }

    /// Sphere dimension n (ambient dimension minus one).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn north_pole(dim: usize) -> Self {
        let mut coords = Coords::from_elem(0.0, dim + 1);
        coords[dim] = 1.0;
        Self { coords }
    }

    pub fn south_pole(dim: usize) -> Self {
        let mut coords = Coords::from_elem(0.0, dim + 1);
        coords[dim] = -1.0;
        Self { coords }
    }

    pub fn antipode(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    /// Ambient Euclidean (chordal) distance; a metric on Sⁿ with range [0, 2].
    ///
    /// Panics if the points live on spheres of different dimension.
    pub fn chordal_distance(&self, other: &SpherePoint) -> f64 {
        assert_eq!(
            self.coords.len(),
            other.coords.len(),
            "chordal distance between points of different ambient dimension"
        );
        self.coords
            .iter()
            .zip(other.coords.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Total lexicographic order on coordinates; fixes merge and reduction
    /// order so parallel and serial runs agree bitwise.
    pub fn lex_cmp(&self, other: &SpherePoint) -> std::cmp::Ordering {
        for (a, b) in self.coords.iter().zip(other.coords.iter()) {
            match a.total_cmp(b) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.coords.len().cmp(&other.coords.len())
    }
}

/// A point of the extended complex plane: the stereographic coordinate on S².
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartPoint {
    Finite(Complex64),
    Infinity,
}

impl ChartPoint {
    pub fn finite(re: f64, im: f64) -> Self {
        ChartPoint::Finite(Complex64::new(re, im))
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, ChartPoint::Infinity)
    }

    pub fn as_finite(&self) -> Option<Complex64> {
        match self {
            ChartPoint::Finite(z) => Some(*z),
            ChartPoint::Infinity => None,
        }
    }
}

impl From<Complex64> for ChartPoint {
    fn from(z: Complex64) -> Self {
        ChartPoint::Finite(z)
    }
}

/// Stereographic projection of S² from the north pole (0,0,1).
///
/// The south pole maps to 0, the equator to the unit circle, and the north
/// pole to the point at infinity.
pub fn stereo_project(p: &SpherePoint) -> Result<ChartPoint, GeometryError> {
    if p.dim() != 2 {
        return Err(GeometryError::NotTwoSphere(p.dim()));
    }
    let [x, y, z] = [p.coords[0], p.coords[1], p.coords[2]];
    if z >= 1.0 {
        return Ok(ChartPoint::Infinity);
    }
    let denom = 1.0 - z;
    Ok(ChartPoint::Finite(Complex64::new(x / denom, y / denom)))
}

/// Inverse stereographic projection; the point at infinity lifts to the
/// north pole.
pub fn stereo_lift(z: ChartPoint) -> SpherePoint {
    match z {
        ChartPoint::Infinity => SpherePoint::north_pole(2),
        ChartPoint::Finite(z) => {
            let r2 = z.norm_sqr();
            if !r2.is_finite() || r2 > 1e300 {
                return SpherePoint::north_pole(2);
            }
            let denom = r2 + 1.0;
            SpherePoint {
                coords: Coords::from_slice(&[
                    2.0 * z.re / denom,
                    2.0 * z.im / denom,
                    (r2 - 1.0) / denom,
                ]),
            }
        }
    }
}

/// Chordal distance between two chart points, via their lifts:
/// `2|z−w| / sqrt((1+|z|²)(1+|w|²))`.
pub fn chart_chordal_distance(z: ChartPoint, w: ChartPoint) -> f64 {
    stereo_lift(z).chordal_distance(&stereo_lift(w))
}

/// `count` points drawn independently from the normalized volume measure of
/// Sⁿ, deterministic in `seed`. Uses normalized Gaussian vectors.
pub fn sample_uniform(dim: usize, count: usize, seed: u64) -> Vec<SpherePoint> {
    let mut rng = seeded_rng(seed);
    let ambient = dim + 1;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut coords = Coords::from_elem(0.0, ambient);
        let mut i = 0;
        while i < ambient {
            let (g0, g1) = gaussian_pair(&mut rng);
            coords[i] = g0;
            if i + 1 < ambient {
                coords[i + 1] = g1;
            }
            i += 2;
        }
        match SpherePoint::normalized(coords) {
            Ok(p) => out.push(p),
            // astronomically unlikely zero draw; redraw
            Err(_) => continue,
        }
    }
    out
}

/// One uniform point, deterministic in `seed`.
pub fn sample_one(dim: usize, seed: u64) -> SpherePoint {
    sample_uniform(dim, 1, seed).pop().expect("count >= 1")
}

fn gaussian_pair(rng: &mut impl rand::Rng) -> (f64, f64) {
    // Box-Muller on (0,1] x [0,1)
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Quasi-uniform deterministic lattice on S² (golden-angle spiral).
pub fn fibonacci_lattice(count: usize) -> Vec<SpherePoint> {
    let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = std::f64::consts::TAU * (i as f64 / golden).fract();
            SpherePoint::normalized([r * phi.cos(), r * phi.sin(), z].as_slice())
                .expect("lattice point is unit")
        })
        .collect()
}

/// `count` equally weighted points on the equatorial unit circle of S²
/// (the chart unit circle), offset by `phase` radians.
pub fn circle_points(count: usize, phase: f64) -> Vec<SpherePoint> {
    (0..count)
        .map(|j| {
            let theta = phase + std::f64::consts::TAU * j as f64 / count as f64;
            SpherePoint::normalized([theta.cos(), theta.sin(), 0.0].as_slice()).expect("unit")
        })
        .collect()
}

fn norm(coords: &[f64]) -> f64 {
    coords.iter().map(|c| c * c).sum::<f64>().sqrt()
}
