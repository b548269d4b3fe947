//! A power-type quasiregular endomorphism of S³.
//!
//! Built from the square-beam decomposition of 3-space: a fixed bi-Lipschitz
//! map h sends the unit square onto the upper hemisphere, extends to the
//! plane by reflections in the unit-square grid (a checkerboard of upper and
//! lower hemispheres), and Z(x, y, t) = e^t h̃(x, y) wraps each square-based
//! beam onto a half-space minus the origin. Conjugating the dilation
//! v ↦ m·v (m odd, so the reflection lattice is preserved) by Z gives an
//! endomorphism of ℝ³ ∖ {0} that extends to S³ = ℝ³ ∪ {∞} fixing 0 and ∞.
//! All its iterates have the same distortion, controlled by the bi-Lipschitz
//! constants of h.
//!
//! The degree is measured, never asserted: preimage counting with index at
//! construction time must return one constant value, which is stored as d.
//! Forward evaluation and preimage solving are checked against each other.

use rand::RngExt;

use crate::endo::{Descriptor, Endomorphism, PreimageAtom, PreimageSet};
use crate::error::{MapError, PreimageError};
use crate::rng::seeded_rng;
use crate::sphere::SpherePoint;
use crate::tolerances::FORWARD_RESIDUAL_TOL;

const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

/// Square-to-hemisphere homeomorphism: concentric square rings map to
/// circles of latitude, the sup-norm radius setting the polar angle.
fn square_to_hemisphere(x: f64, y: f64) -> [f64; 3] {
    let r = x.abs().max(y.abs());
    if r < 1e-300 {
        return [0.0, 0.0, 1.0];
    }
    let s = (x * x + y * y).sqrt();
    let alpha = r * HALF_PI;
    let (sa, ca) = alpha.sin_cos();
    [sa * x / s, sa * y / s, ca]
}

/// Inverse of [`square_to_hemisphere`] on the closed upper hemisphere.
fn hemisphere_to_square(u: &[f64; 3]) -> [f64; 2] {
    let alpha = u[2].clamp(-1.0, 1.0).acos();
    let r = alpha / HALF_PI;
    let s = (u[0] * u[0] + u[1] * u[1]).sqrt();
    if s < 1e-300 {
        return [0.0, 0.0];
    }
    let (dx, dy) = (u[0] / s, u[1] / s);
    let scale = r / dx.abs().max(dy.abs());
    [scale * dx, scale * dy]
}

/// Fold a coordinate into the base square: period 4, with a reflection on
/// the odd cells. Returns (folded value in [-1,1], reflection sign).
fn fold(x: f64) -> (f64, f64) {
    let xi = x - 4.0 * ((x + 2.0) / 4.0).floor();
    if xi.abs() <= 1.0 {
        (xi, 1.0)
    } else {
        (xi.signum() * (2.0 - xi.abs()), -1.0)
    }
}

/// The reflected extension h̃: ℝ² → S².
fn beam_direction(x: f64, y: f64) -> [f64; 3] {
    let (tx, sx) = fold(x);
    let (ty, sy) = fold(y);
    let b = square_to_hemisphere(tx, ty);
    [b[0], b[1], sx * sy * b[2]]
}

/// Chart value: a point of ℝ³ ∪ {∞} (stereographic chart of S³).
#[derive(Debug, Clone, Copy, PartialEq)]
enum Chart3 {
    Finite([f64; 3]),
    Infinity,
}

fn project3(p: &SpherePoint) -> Chart3 {
    let c = p.coords();
    if c[3] >= 1.0 {
        return Chart3::Infinity;
    }
    let d = 1.0 - c[3];
    Chart3::Finite([c[0] / d, c[1] / d, c[2] / d])
}

fn lift3(v: Chart3) -> SpherePoint {
    match v {
        Chart3::Infinity => SpherePoint::north_pole(3),
        Chart3::Finite(v) => {
            let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            if !r2.is_finite() || r2 > 1e300 {
                return SpherePoint::north_pole(3);
            }
            let d = r2 + 1.0;
            SpherePoint::normalized(
                [
                    2.0 * v[0] / d,
                    2.0 * v[1] / d,
                    2.0 * v[2] / d,
                    (r2 - 1.0) / d,
                ]
                .as_slice(),
            )
            .expect("finite chart point lifts")
        }
    }
}

/// Power-type quasiregular map of S³ with odd stretch factor m ≥ 3.
#[derive(Debug, Clone)]
pub struct ZorichPowerMap {
    stretch: u32,
    degree: u32,
    distortion: f64,
}

impl ZorichPowerMap {
    /// Construct the map, measure its degree at `measure_targets` random
    /// targets (they must all agree), and measure the distortion bound from
    /// the bi-Lipschitz constants of the beam homeomorphism.
    pub fn new(stretch: u32) -> Result<Self, MapError> {
        Self::with_measurement(stretch, 1000, 20_240_803)
    }

    pub fn with_measurement(
        stretch: u32,
        measure_targets: usize,
        seed: u64,
    ) -> Result<Self, MapError> {
        if stretch < 3 || stretch.is_multiple_of(2) {
            return Err(MapError::BadStretchFactor(stretch));
        }
        let mut prototype = ZorichPowerMap {
            stretch,
            degree: stretch * stretch, // provisional; replaced by measurement
            distortion: 1.0,
        };
        let mut counts = Vec::new();
        for y in crate::sphere::sample_uniform(3, measure_targets, seed) {
            let atoms = prototype
                .raw_preimages(&y)
                .map_err(|_| MapError::InconsistentDegree(Vec::new()))?;
            counts.push(atoms.iter().map(|a| a.index).sum::<u32>());
        }
        counts.sort_unstable();
        counts.dedup();
        if counts.len() != 1 {
            return Err(MapError::InconsistentDegree(counts));
        }
        prototype.degree = counts[0];
        if prototype.degree < 2 {
            return Err(MapError::DegreeTooLow(prototype.degree));
        }
        prototype.distortion = measure_beam_distortion();
        Ok(prototype)
    }

    pub fn stretch(&self) -> u32 {
        self.stretch
    }

    fn eval_chart(&self, v: Chart3) -> Chart3 {
        let m = self.stretch as f64;
        match v {
            Chart3::Infinity => Chart3::Infinity,
            Chart3::Finite(v) => {
                let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if norm < 1e-300 {
                    return Chart3::Finite([0.0, 0.0, 0.0]);
                }
                let t = norm.ln();
                let u = [v[0] / norm, v[1] / norm, v[2] / norm];
                // canonical branch of Z^{-1}
                let (base, flip) = if u[2] >= 0.0 {
                    (hemisphere_to_square(&u), false)
                } else {
                    (hemisphere_to_square(&[u[0], u[1], -u[2]]), true)
                };
                let (x, y) = if flip {
                    (2.0 - base[0], base[1]) // neighbor beam carries sign -1
                } else {
                    (base[0], base[1])
                };
                let dir = beam_direction(m * x, m * y);
                let radius = (m * t).exp();
                if !radius.is_finite() {
                    return Chart3::Infinity;
                }
                Chart3::Finite([radius * dir[0], radius * dir[1], radius * dir[2]])
            }
        }
    }

    /// Enumerate beam translates mapping onto the target's beam and return
    /// merged preimage atoms.
    fn raw_preimages(&self, y: &SpherePoint) -> Result<Vec<PreimageAtom>, PreimageError> {
        let m = self.stretch as f64;
        let w = match project3(y) {
            Chart3::Infinity => {
                return Ok(vec![PreimageAtom {
                    point: SpherePoint::north_pole(3),
                    index: self.degree,
                }])
            }
            Chart3::Finite(w) => w,
        };
        let norm = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        if norm < 1e-300 {
            return Ok(vec![PreimageAtom {
                point: SpherePoint::south_pole(3),
                index: self.degree,
            }]);
        }
        let t = norm.ln();
        let u = [w[0] / norm, w[1] / norm, w[2] / norm];
        let (base, sigma) = if u[2] >= 0.0 {
            (hemisphere_to_square(&u), 1.0)
        } else {
            (hemisphere_to_square(&[u[0], u[1], -u[2]]), -1.0)
        };

        // fiber classes of the beam lattice: direct (sign +) and reflected
        // (sign -) translates in each coordinate, sign product matching
        let msize = self.stretch as i64;
        let mut candidates: Vec<[f64; 3]> = Vec::with_capacity((2 * msize * msize) as usize);
        for (x_ref, x_sign) in [(false, 1.0), (true, -1.0)] {
            for (y_ref, y_sign) in [(false, 1.0), (true, -1.0)] {
                if x_sign * y_sign != sigma {
                    continue;
                }
                for jx in 0..msize {
                    for jy in 0..msize {
                        let xs = if x_ref { 2.0 - base[0] } else { base[0] } + 4.0 * jx as f64;
                        let ys = if y_ref { 2.0 - base[1] } else { base[1] } + 4.0 * jy as f64;
                        candidates.push([xs / m, ys / m, t / m]);
                    }
                }
            }
        }

        let radius = (t / m).exp();
        let mut atoms: Vec<PreimageAtom> = Vec::new();
        for cand in candidates {
            let dir = beam_direction(cand[0], cand[1]);
            let point = lift3(Chart3::Finite([
                radius * dir[0],
                radius * dir[1],
                radius * dir[2],
            ]));
            let residual = self.evaluate(&point).chordal_distance(y);
            if residual > FORWARD_RESIDUAL_TOL {
                return Err(PreimageError::ForwardResidual {
                    point: point.coords().to_vec(),
                    residual,
                });
            }
            match atoms
                .iter_mut()
                .find(|a| a.point.chordal_distance(&point) < crate::tolerances::ATOM_MERGE_TOL)
            {
                Some(a) => a.index += 1,
                None => atoms.push(PreimageAtom { point, index: 1 }),
            }
        }
        // the beam lattice double-counts each fiber point once
        for a in atoms.iter_mut() {
            if a.index % 2 != 0 {
                return Err(PreimageError::IndexSumMismatch {
                    got: a.index,
                    expected: 2,
                });
            }
            a.index /= 2;
        }
        Ok(atoms)
    }
}

/// Bi-Lipschitz constants of the beam homeomorphism measured by sampled
/// difference quotients; the distortion of the power map is bounded by
/// (L·L')² in dimension 3.
fn measure_beam_distortion() -> f64 {
    let mut rng = seeded_rng(0xbea7);
    let mut max_ratio: f64 = 0.0;
    let mut min_ratio = f64::INFINITY;
    let h = 1e-6;
    for _ in 0..4000 {
        let x = 0.98 * (2.0 * rng.random::<f64>() - 1.0);
        let y = 0.98 * (2.0 * rng.random::<f64>() - 1.0);
        if x.abs().max(y.abs()) < 0.05 {
            continue; // the ring parametrization degenerates at the center
        }
        let theta: f64 = std::f64::consts::TAU * rng.random::<f64>();
        let (dx, dy) = (h * theta.cos(), h * theta.sin());
        let a = square_to_hemisphere(x, y);
        let b = square_to_hemisphere(x + dx, y + dy);
        let chord = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        let ratio = chord / h;
        if ratio.is_finite() && ratio > 0.0 {
            max_ratio = max_ratio.max(ratio);
            min_ratio = min_ratio.min(ratio);
        }
    }
    ((max_ratio / min_ratio).powi(2)).max(1.0)
}

impl Endomorphism for ZorichPowerMap {
    fn descriptor(&self) -> Descriptor {
        Descriptor {
            dimension: 3,
            degree: self.degree,
            distortion: self.distortion,
        }
    }

    fn evaluate(&self, x: &SpherePoint) -> SpherePoint {
        lift3(self.eval_chart(project3(x)))
    }

    fn preimages(&self, y: &SpherePoint) -> Result<PreimageSet, PreimageError> {
        PreimageSet::new(self.raw_preimages(y)?, self.degree)
    }
}
