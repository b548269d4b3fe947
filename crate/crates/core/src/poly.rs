//! Complex polynomials and a simultaneous-iteration root solver.
//!
//! Roots are found by the Ehrlich-Aberth method (all roots at once, no
//! deflation), polished by guarded Newton steps, and then clustered:
//! estimates closer than a radius set by their own error estimates collapse
//! into one root whose multiplicity is the cluster size. The cluster size is
//! what preimage solving reports as the local index, so multiple roots at
//! critical values are first-class citizens rather than failure modes.

use num_complex::Complex64;

use crate::tolerances::{LEAD_COEFF_TRIM, ROOT_CLUSTER_RADIUS};

const MAX_ITERATIONS: u32 = 400;
const EPS: f64 = f64::EPSILON;

/// Polynomial with complex coefficients in ascending order:
/// `coeffs[k]` multiplies `z^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    /// Build from ascending coefficients, dropping exactly-zero leading terms.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&Complex64::ZERO) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::ZERO);
        }
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// Monic polynomial with the given roots (test helper).
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut p = Poly::new(vec![Complex64::ONE]);
        for &r in roots {
            p = p.mul(&Poly::new(vec![-r, Complex64::ONE]));
        }
        p
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drop leading coefficients whose magnitude is below `tol` relative to
    /// the largest coefficient. The degree drop is meaningful: for preimage
    /// pencils it is the local index at infinity.
    pub fn trim_relative(&self, tol: f64) -> Poly {
        let scale = self.max_coeff_norm();
        let mut coeffs = self.coeffs.clone();
        while coeffs.len() > 1 {
            let lead = coeffs.last().expect("nonempty").norm();
            if lead <= tol * scale {
                coeffs.pop();
            } else {
                break;
            }
        }
        Poly { coeffs }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Horner evaluation of the polynomial and its derivative together.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::ZERO;
        let mut dp = Complex64::ZERO;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::new(vec![Complex64::ZERO]);
        }
        Poly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| c * (i as f64 + 1.0))
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![Complex64::ZERO; n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        Poly::new(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-Complex64::ONE))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::new(vec![Complex64::ZERO]);
        }
        let mut out = vec![Complex64::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// `p(q(z))` by Horner over polynomials.
    pub fn compose(&self, inner: &Poly) -> Poly {
        let mut acc = Poly::new(vec![Complex64::ZERO]);
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul(inner).add(&Poly::new(vec![c]));
        }
        acc
    }

    /// Coefficients reversed: `z^deg * p(1/z)`.
    pub fn reversed(&self) -> Poly {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        Poly::new(coeffs)
    }

    /// Backward-error style scaled residual of a root estimate.
    fn scaled_residual(&self, z: Complex64) -> f64 {
        let p = self.eval(z).norm();
        let zn = z.norm().max(1.0);
        let mut scale = 0.0;
        let mut pow = 1.0;
        for c in &self.coeffs {
            scale += c.norm() * pow;
            pow *= zn;
        }
        if scale == 0.0 {
            return 0.0;
        }
        p / scale
    }
}

/// One root of a polynomial after clustering.
#[derive(Debug, Clone, Copy)]
pub struct RootCluster {
    pub center: Complex64,
    pub multiplicity: u32,
    /// Scaled residual of the polynomial at the cluster center.
    pub residual: f64,
}

/// Result of a simultaneous root solve.
#[derive(Debug, Clone)]
pub struct RootsOutcome {
    pub clusters: Vec<RootCluster>,
    /// Worst scaled residual over all cluster centers.
    pub worst_residual: f64,
    pub iterations: u32,
}

impl RootsOutcome {
    pub fn total_multiplicity(&self) -> u32 {
        self.clusters.iter().map(|c| c.multiplicity).sum()
    }
}

/// Find all roots of `poly` (counted with multiplicity via clustering).
///
/// The input is trimmed of relatively negligible leading coefficients first;
/// callers that care about the degree drop should trim themselves and compare
/// degrees. A zero or constant polynomial yields no roots.
pub fn solve_roots(poly: &Poly) -> RootsOutcome {
    let p = poly.trim_relative(LEAD_COEFF_TRIM);
    let d = p.degree();
    if d == 0 || p.is_zero() {
        return RootsOutcome {
            clusters: Vec::new(),
            worst_residual: 0.0,
            iterations: 0,
        };
    }
    let (raw, iterations) = match d {
        1 => (vec![-p.coeffs[0] / p.coeffs[1]], 0),
        2 => (solve_quadratic(&p), 0),
        _ => aberth(&p),
    };
    let polished = polish(&p, raw);
    cluster(&p, polished, iterations)
}

/// Numerically stable quadratic formula.
fn solve_quadratic(p: &Poly) -> Vec<Complex64> {
    let (c, b, a) = (p.coeffs[0], p.coeffs[1], p.coeffs[2]);
    let disc = b * b - 4.0 * a * c;
    let sq = disc.sqrt();
    // pick the sign that avoids cancellation in b +/- sq
    let q = if (b + sq).norm() >= (b - sq).norm() {
        -(b + sq) / 2.0
    } else {
        -(b - sq) / 2.0
    };
    if q.norm() == 0.0 {
        return vec![Complex64::ZERO, Complex64::ZERO];
    }
    vec![q / a, c / q]
}

/// Ehrlich-Aberth iteration with in-place updates.
fn aberth(p: &Poly) -> (Vec<Complex64>, u32) {
    let d = p.degree();
    let lead = p.coeffs[d];

    // Fujiwara-style inclusion radius for initial guesses.
    let mut radius: f64 = 0.0;
    for (i, c) in p.coeffs.iter().enumerate().take(d) {
        let r = (c.norm() / lead.norm()).powf(1.0 / (d - i) as f64);
        radius = radius.max(r);
    }
    radius = (2.0 * radius).max(0.5);

    let mut z: Vec<Complex64> = (0..d)
        .map(|j| {
            // irrational angular offset breaks symmetric stalls
            let theta = std::f64::consts::TAU * (j as f64 / d as f64) + 0.4;
            Complex64::from_polar(radius, theta)
        })
        .collect();
    let mut done = vec![false; d];

    let mut iterations = 0;
    for it in 0..MAX_ITERATIONS {
        iterations = it + 1;
        let mut all_done = true;
        for j in 0..d {
            if done[j] {
                continue;
            }
            let (pv, dpv) = p.eval_with_derivative(z[j]);
            let scale_here = coeff_scale(p, z[j]);
            if pv.norm() <= 8.0 * EPS * scale_here {
                done[j] = true;
                continue;
            }
            let newton = if dpv.norm() > 0.0 {
                pv / dpv
            } else {
                // nudge off a critical point of p
                let nudge = 1e-8 * (1.0 + z[j].norm());
                z[j] += Complex64::new(nudge, 0.0);
                all_done = false;
                continue;
            };
            let mut sum = Complex64::ZERO;
            for (l, &zl) in z.iter().enumerate() {
                if l != j {
                    let diff = z[j] - zl;
                    if diff.norm_sqr() > 0.0 {
                        sum += diff.inv();
                    }
                }
            }
            let denom = Complex64::ONE - newton * sum;
            let w = if denom.norm() > 1e-290 {
                newton / denom
            } else {
                newton
            };
            z[j] -= w;
            if w.norm() <= 1e-13 * (1.0 + z[j].norm()) {
                done[j] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            break;
        }
    }
    (z, iterations)
}

fn coeff_scale(p: &Poly, z: Complex64) -> f64 {
    let zn = z.norm().max(1.0);
    let mut scale = 0.0;
    let mut pow = 1.0;
    for c in &p.coeffs {
        scale += c.norm() * pow;
        pow *= zn;
    }
    scale
}

/// A few guarded Newton steps per root; a step is kept only if it reduces
/// |p|, so multiple roots do not bounce.
fn polish(p: &Poly, mut roots: Vec<Complex64>) -> Vec<Complex64> {
    for z in roots.iter_mut() {
        let mut best = p.eval(*z).norm();
        for _ in 0..4 {
            let (pv, dpv) = p.eval_with_derivative(*z);
            if dpv.norm() == 0.0 || pv.norm() == 0.0 {
                break;
            }
            let candidate = *z - pv / dpv;
            let cand_res = p.eval(candidate).norm();
            if cand_res < best {
                *z = candidate;
                best = cand_res;
            } else {
                break;
            }
        }
    }
    roots
}

/// Group root estimates into multiplicity clusters.
///
/// Two estimates join when their distance is below the fixed cluster radius
/// (relative to 1 + |z|) or below a few times their own error estimates,
/// which for an m-fold root scatter of size rho are of order rho.
fn cluster(p: &Poly, roots: Vec<Complex64>, iterations: u32) -> RootsOutcome {
    let n = roots.len();
    let err: Vec<f64> = roots
        .iter()
        .map(|&z| {
            let (pv, dpv) = p.eval_with_derivative(z);
            if dpv.norm() <= EPS * coeff_scale(&p.derivative(), z) {
                ROOT_CLUSTER_RADIUS * (1.0 + z.norm())
            } else {
                3.0 * (pv / dpv).norm()
            }
        })
        .collect();

    // union-find over pairs
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = (roots[i] - roots[j]).norm();
            let scale = 1.0 + roots[i].norm().max(roots[j].norm());
            let radius = (ROOT_CLUSTER_RADIUS * scale).max(5.0 * (err[i] + err[j]));
            if dist <= radius {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }

    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }

    let mut clusters: Vec<RootCluster> = groups
        .values()
        .map(|members| {
            let m = members.len() as f64;
            let centroid = members.iter().map(|&i| roots[i]).sum::<Complex64>() / m;
            let center = if members.len() >= 2 {
                let spread = members
                    .iter()
                    .map(|&i| (roots[i] - centroid).norm())
                    .fold(0.0, f64::max);
                refine_multiple_root(p, centroid, members.len(), spread)
            } else {
                centroid
            };
            RootCluster {
                center,
                multiplicity: members.len() as u32,
                residual: p.scaled_residual(center),
            }
        })
        .collect();
    clusters.sort_by(|a, b| {
        a.center
            .re
            .total_cmp(&b.center.re)
            .then(a.center.im.total_cmp(&b.center.im))
    });
    let worst = clusters.iter().map(|c| c.residual).fold(0.0, f64::max);
    RootsOutcome {
        clusters,
        worst_residual: worst,
        iterations,
    }
}

/// An m-fold root of p is a simple root of the (m-1)-th derivative; Newton
/// there recovers the cluster center to machine precision, where the
/// centroid of the scattered estimates only reaches the m-th root of the
/// residual floor. Keeps superattracting cycles exactly fixed under
/// preimage iteration.
fn refine_multiple_root(p: &Poly, centroid: Complex64, m: usize, spread: f64) -> Complex64 {
    let mut q = p.clone();
    for _ in 1..m {
        q = q.derivative();
    }
    let mut z = centroid;
    for _ in 0..30 {
        let (v, dv) = q.eval_with_derivative(z);
        if dv.norm() == 0.0 {
            break;
        }
        let step = v / dv;
        z -= step;
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    let allowed = 4.0 * spread + ROOT_CLUSTER_RADIUS * (1.0 + centroid.norm());
    if (z - centroid).norm() <= allowed {
        z
    } else {
        centroid
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_root_set(outcome: &RootsOutcome, expected: &[(Complex64, u32)], tol: f64) {
        assert_eq!(
            outcome.clusters.len(),
            expected.len(),
            "cluster count: {:?}",
            outcome.clusters
        );
        let mut used = vec![false; expected.len()];
        for cl in &outcome.clusters {
            let (idx, _) = expected
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .min_by(|(_, a), (_, b)| {
                    (cl.center - a.0)
                        .norm()
                        .total_cmp(&(cl.center - b.0).norm())
                })
                .expect("expected root left");
            used[idx] = true;
            assert!(
                (cl.center - expected[idx].0).norm() < tol,
                "root {:?} vs expected {:?}",
                cl.center,
                expected[idx].0
            );
            assert_eq!(cl.multiplicity, expected[idx].1);
        }
    }

    #[test]
    fn quartic_roots_of_unity() {
        // z^4 - 1
        let p = Poly::from_real(&[-1.0, 0.0, 0.0, 0.0, 1.0]);
        let out = solve_roots(&p);
        assert_root_set(
            &out,
            &[
                (c(1.0, 0.0), 1),
                (c(-1.0, 0.0), 1),
                (c(0.0, 1.0), 1),
                (c(0.0, -1.0), 1),
            ],
            1e-12,
        );
        assert!(out.worst_residual < 1e-14);
    }

    #[test]
    fn double_root_is_clustered() {
        // (z - 1)^2 (z + 2)
        let p = Poly::from_roots(&[c(1.0, 0.0), c(1.0, 0.0), c(-2.0, 0.0)]);
        let out = solve_roots(&p);
        assert_root_set(&out, &[(c(1.0, 0.0), 2), (c(-2.0, 0.0), 1)], 1e-6);
    }

    #[test]
    fn triple_root_at_zero() {
        // z^3: estimates scatter at the cube root of the residual floor but
        // must still collapse into one multiplicity-3 cluster near 0.
        let p = Poly::from_real(&[0.0, 0.0, 0.0, 1.0]);
        let out = solve_roots(&p);
        assert_eq!(out.clusters.len(), 1);
        assert_eq!(out.clusters[0].multiplicity, 3);
        // derivative refinement pins the center far below the m-th root of
        // the residual floor
        assert!(out.clusters[0].center.norm() < 1e-12);
    }

    #[test]
    fn triple_root_shifted() {
        // (z - (1+i))^3 (z + 3)
        let r = c(1.0, 1.0);
        let p = Poly::from_roots(&[r, r, r, c(-3.0, 0.0)]);
        let out = solve_roots(&p);
        assert_root_set(&out, &[(r, 3), (c(-3.0, 0.0), 1)], 1e-4);
    }

    #[test]
    fn nearby_but_distinct_roots_stay_separate() {
        let p = Poly::from_roots(&[c(0.5, 0.0), c(0.5 + 1e-4, 0.0), c(-1.0, 0.0)]);
        let out = solve_roots(&p);
        assert_eq!(out.clusters.len(), 3, "{:?}", out.clusters);
        assert!(out.clusters.iter().all(|cl| cl.multiplicity == 1));
    }

    #[test]
    fn linear_and_constant_edge_cases() {
        let p = Poly::from_real(&[3.0, 2.0]);
        let out = solve_roots(&p);
        assert_eq!(out.clusters.len(), 1);
        assert!((out.clusters[0].center - c(-1.5, 0.0)).norm() < 1e-15);
        let konst = Poly::from_real(&[4.0]);
        assert!(solve_roots(&konst).clusters.is_empty());
    }

    #[test]
    fn high_degree_random_poly_reconstructs() {
        use rand::RngExt;
        let mut rng = crate::rng::seeded_rng(11);
        let roots: Vec<Complex64> = (0..12)
            .map(|_| {
                c(
                    4.0 * (rng.random::<f64>() - 0.5),
                    4.0 * (rng.random::<f64>() - 0.5),
                )
            })
            .collect();
        let p = Poly::from_roots(&roots);
        let out = solve_roots(&p);
        assert_eq!(out.total_multiplicity(), 12);
        for cl in &out.clusters {
            let nearest = roots
                .iter()
                .map(|r| (cl.center - r).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-6, "stray root {:?}", cl.center);
        }
    }

    #[test]
    fn composition_and_arithmetic() {
        let p = Poly::from_real(&[-2.0, 0.0, 1.0]); // z^2 - 2
        let q = p.compose(&p); // (z^2-2)^2 - 2
        assert_eq!(q.degree(), 4);
        let z = c(0.3, -0.7);
        assert!((q.eval(z) - (p.eval(p.eval(z)))).norm() < 1e-12);
        let dp = p.derivative();
        assert_eq!(dp.coeffs(), &[c(0.0, 0.0), c(2.0, 0.0)]);
    }

    #[test]
    fn trim_detects_degree_drop() {
        let p = Poly::new(vec![c(1.0, 0.0), c(1.0, 0.0), c(1e-15, 0.0)]);
        assert_eq!(p.trim_relative(1e-12).degree(), 1);
    }
}
