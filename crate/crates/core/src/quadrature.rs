//! Deterministic quadrature rules used for dictionary constants and oracles.

use crate::sphere::SpherePoint;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre polynomial from Chebyshev initial guesses.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// A product rule on S²: Gauss-Legendre in cos θ times a uniform azimuthal
/// grid. Weights sum to 1 (probability normalization); exact for spherical
/// polynomials of degree up to `min(2*n_polar - 1, n_azimuth - 1)`.
pub fn sphere_product_rule(n_polar: usize, n_azimuth: usize) -> Vec<(SpherePoint, f64)> {
    let gl = gauss_legendre(n_polar);
    let mut out = Vec::with_capacity(n_polar * n_azimuth);
    for &(z, wz) in &gl {
        let r = (1.0 - z * z).max(0.0).sqrt();
        for j in 0..n_azimuth {
            let phi = std::f64::consts::TAU * j as f64 / n_azimuth as f64;
            let p = SpherePoint::normalized([r * phi.cos(), r * phi.sin(), z].as_slice())
                .expect("unit");
            out.push((p, 0.5 * wz / n_azimuth as f64));
        }
    }
    out
}

/// A product rule on S³ with probability weights: Gauss-Legendre in the
/// polar angle χ against the sin²χ density, times an S² product rule.
pub fn three_sphere_product_rule(
    n_chi: usize,
    n_polar: usize,
    n_azimuth: usize,
) -> Vec<(SpherePoint, f64)> {
    // substitute χ over [0, π] with GL nodes in u = cos χ is wrong for the
    // sin²χ weight; integrate in χ directly with GL on [0, π].
    let gl = gauss_legendre(n_chi);
    let s2 = sphere_product_rule(n_polar, n_azimuth);
    let half_pi = std::f64::consts::PI / 2.0;
    let norm = 2.0 / std::f64::consts::PI; // ∫ sin²χ dχ over [0,π] is π/2
    let mut out = Vec::with_capacity(n_chi * s2.len());
    for &(t, wt) in &gl {
        let chi = half_pi * (t + 1.0);
        let w_chi = norm * half_pi * wt * chi.sin().powi(2);
        for (p, wp) in &s2 {
            let c = p.coords();
            let s = chi.sin();
            let q = SpherePoint::normalized([chi.cos(), s * c[0], s * c[1], s * c[2]].as_slice())
                .expect("unit");
            out.push((q, w_chi * wp));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(8);
        // ∫_{-1}^{1} x^k dx
        for k in 0..=15usize {
            let got: f64 = rule.iter().map(|(x, w)| w * x.powi(k as i32)).sum();
            let expected = if k % 2 == 1 {
                0.0
            } else {
                2.0 / (k as f64 + 1.0)
            };
            assert!(
                (got - expected).abs() < 1e-13,
                "degree {k}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn sphere_rule_is_a_probability_rule() {
        let rule = sphere_product_rule(16, 32);
        let total: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-13);
        // ∫ z² dω = 1/3, ∫ x y dω = 0
        let z2: f64 = rule.iter().map(|(p, w)| w * p.coords()[2].powi(2)).sum();
        let xy: f64 = rule
            .iter()
            .map(|(p, w)| w * p.coords()[0] * p.coords()[1])
            .sum();
        assert!((z2 - 1.0 / 3.0).abs() < 1e-13);
        assert!(xy.abs() < 1e-14);
    }

    #[test]
    fn three_sphere_rule_moments() {
        let rule = three_sphere_product_rule(24, 12, 24);
        let total: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // each ambient coordinate has variance 1/4 on S³
        for i in 0..4 {
            let v: f64 = rule.iter().map(|(p, w)| w * p.coords()[i].powi(2)).sum();
            assert!((v - 0.25).abs() < 1e-10, "coord {i}: {v}");
        }
    }
}
