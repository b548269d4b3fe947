//! Independent Julia-set references.
//!
//! Two constructions that do not go through the pullback machinery they are
//! used to check: an escape-time sweep with the exterior distance estimator
//! for polynomial maps (handles measure-zero Julia sets such as segments),
//! and backward-orbit closure from a repelling fixed point for general
//! rational maps.

use num_complex::Complex64;

use crate::endo::{Endomorphism, RationalMap};
use crate::error::PreimageError;
use crate::poly::Poly;
use crate::sphere::{stereo_lift, ChartPoint, SpherePoint};

/// Escape-time Julia samples of a polynomial map.
///
/// Sweeps a `grid x grid` chart window covering the escape radius
/// `max(2, 1 + Σ|a_i|/|a_d|)`, iterates with the orbit derivative, and keeps
/// points whose exterior distance estimate `|z| ln|z| / |z'|` falls below
/// `de_threshold` (in chart units). Iteration cap 10³.
pub fn escape_time_julia(
    map: &RationalMap,
    grid: usize,
    de_threshold: f64,
    max_samples: usize,
) -> Vec<SpherePoint> {
    assert!(
        map.is_polynomial(),
        "escape-time reference needs a polynomial map"
    );
    // the map stores jointly normalized coefficients; divide out the
    // constant denominator to get the acting polynomial
    let q0 = map.denominator().coeffs()[0];
    let p = map.numerator().scale(q0.inv());
    let dp = p.derivative();
    let d = p.degree();
    let lead = p.coeffs()[d].norm();
    let coeff_sum: f64 = p.coeffs()[..d].iter().map(|c| c.norm()).sum();
    let escape_radius = (1.0 + coeff_sum / lead).max(2.0);
    let window = escape_radius + 0.5;

    let mut samples = Vec::new();
    let cap = 1000usize;
    for iy in 0..grid {
        for ix in 0..grid {
            let z0 = Complex64::new(
                -window + 2.0 * window * (ix as f64 + 0.5) / grid as f64,
                -window + 2.0 * window * (iy as f64 + 0.5) / grid as f64,
            );
            if let Some(de) = distance_estimate(&p, &dp, z0, escape_radius, cap) {
                if de < de_threshold {
                    samples.push(stereo_lift(ChartPoint::Finite(z0)));
                }
            }
        }
    }
    thin(samples, max_samples)
}

/// Exterior distance estimate at `z0`; `None` when the orbit does not escape
/// within the cap (interior or on the Julia set).
fn distance_estimate(
    p: &Poly,
    dp: &Poly,
    z0: Complex64,
    escape_radius: f64,
    cap: usize,
) -> Option<f64> {
    let mut z = z0;
    let mut w = Complex64::ONE;
    for _ in 0..cap {
        if z.norm() > 1e8 || w.norm() > 1e250 {
            break;
        }
        w = dp.eval(z) * w;
        z = p.eval(z);
        if !(z.re.is_finite() && z.im.is_finite()) {
            return None; // overflowed the orbit: far outside, no estimate
        }
    }
    let zn = z.norm();
    if zn <= escape_radius {
        return None;
    }
    let wn = w.norm();
    if wn == 0.0 {
        return None;
    }
    Some(zn * zn.ln() / wn)
}

/// Backward-orbit Julia reference: full preimage trees from a repelling
/// fixed point, levels deduplicated, thinned to the budget.
pub fn backward_orbit_julia(
    map: &RationalMap,
    depth: usize,
    budget: usize,
) -> Result<Vec<SpherePoint>, PreimageError> {
    let seed = repelling_fixed_point(map).unwrap_or_else(|| {
        // no strictly repelling fixed point found; fall back to any
        // non-superattracting one
        map.periodic_points_chart(1)
            .into_iter()
            .filter_map(|cp| cp.as_finite())
            .next()
            .map(|z| stereo_lift(ChartPoint::Finite(z)))
            .unwrap_or_else(|| SpherePoint::north_pole(2))
    });

    let mut frontier = vec![seed];
    let mut collected: Vec<SpherePoint> = Vec::new();
    for _ in 0..depth {
        let mut next = Vec::new();
        for y in &frontier {
            for atom in map.preimages(y)?.atoms() {
                next.push(atom.point.clone());
            }
        }
        next.sort_by(|a, b| a.lex_cmp(b));
        next.dedup_by(|a, b| a.chordal_distance(b) < 1e-9);
        frontier = thin(next, budget);
        collected = frontier.clone();
    }
    Ok(collected)
}

/// A fixed point with |f'| > 1.05, preferring the most repelling one.
pub fn repelling_fixed_point(map: &RationalMap) -> Option<SpherePoint> {
    let mut best: Option<(f64, Complex64)> = None;
    for cp in map.periodic_points_chart(1) {
        if let Some(z) = cp.as_finite() {
            let m = map.orbit_multiplier(z, 1);
            if m.is_finite() && m > 1.05 && best.map(|(b, _)| m > b).unwrap_or(true) {
                best = Some((m, z));
            }
        }
    }
    best.map(|(_, z)| stereo_lift(ChartPoint::Finite(z)))
}

fn thin(mut points: Vec<SpherePoint>, max: usize) -> Vec<SpherePoint> {
    if points.len() <= max {
        return points;
    }
    let stride = points.len() as f64 / max as f64;
    let mut out = Vec::with_capacity(max);
    let mut cursor = 0.0;
    while (cursor as usize) < points.len() && out.len() < max {
        out.push(points[cursor as usize].clone());
        cursor += stride;
    }
    std::mem::swap(&mut points, &mut out);
    points
}
