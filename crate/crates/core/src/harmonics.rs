//! Smooth test functions on S² and S³ with computable gradient constants.
//!
//! The weak-convergence, balance, invariance, and mixing statistics all test
//! measures against a finite dictionary of smooth functions. On S² these are
//! the real spherical harmonics through a chosen degree, normalized so that
//! ∫ Y² dω = 1 against the probability volume measure; every dictionary
//! member has mean zero. On S³ the dictionary consists of hyperspherical
//! harmonics sin^j(χ) C_{l-j}^{(j+1)}(cos χ) Y_{j,m}(u), normalized by
//! quadrature.
//!
//! Each function carries two constants fixed at construction time from
//! deterministic quadrature grids: the sup norm of its gradient (used to
//! normalize weak distances) and the Lⁿ norm of its gradient against the
//! normalized volume (used by the deviation-set capacity bound).

use crate::measure::DiscreteMeasure;
use crate::quadrature::{gauss_legendre, sphere_product_rule, three_sphere_product_rule};
use crate::sphere::{fibonacci_lattice, stereo_project, ChartPoint, SpherePoint};

/// A scalar observable on the sphere with gradient constants.
pub trait Observable: Sync {
    fn id(&self) -> &str;
    fn eval(&self, p: &SpherePoint) -> f64;
    /// Sampled sup norm of the (Riemannian) gradient.
    fn grad_sup(&self) -> f64;
    /// ‖∇φ‖_n against the normalized volume, n the sphere dimension.
    fn grad_norm_n(&self) -> f64;
}

// ---------------------------------------------------------------------------
// real spherical harmonics on S²
// ---------------------------------------------------------------------------

/// Normalization N_{l,m} with ∫ Y² dω = 1 (dω the probability measure).
fn s2_norm(l: u32, m: u32) -> f64 {
    let mut ratio = 1.0; // (l-m)!/(l+m)!
    for k in (l - m + 1)..=(l + m) {
        ratio /= k as f64;
    }
    ((2 * l + 1) as f64 * ratio).sqrt()
}

/// Associated Legendre values P_l^m(x) for fixed m, all l in m..=lmax.
fn legendre_column(m: u32, lmax: u32, x: f64) -> Vec<f64> {
    let somx2 = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut pmm = 1.0;
    for k in 1..=m {
        pmm *= (2 * k - 1) as f64 * somx2;
    }
    let mut out = Vec::with_capacity((lmax - m + 1) as usize);
    out.push(pmm);
    if lmax == m {
        return out;
    }
    let pmmp1 = x * (2 * m + 1) as f64 * pmm;
    out.push(pmmp1);
    let (mut p0, mut p1) = (pmm, pmmp1);
    for l in (m + 2)..=lmax {
        let p2 = ((2 * l - 1) as f64 * x * p1 - (l + m - 1) as f64 * p0) / (l - m) as f64;
        out.push(p2);
        p0 = p1;
        p1 = p2;
    }
    out
}

struct SphereAngles {
    ct: f64,
    st: f64,
    cp: f64,
    sp: f64,
}

fn angles(p: &SpherePoint) -> SphereAngles {
    let c = p.coords();
    let st = (c[0] * c[0] + c[1] * c[1]).sqrt();
    if st < 1e-290 {
        SphereAngles {
            ct: c[2].clamp(-1.0, 1.0),
            st: 0.0,
            cp: 1.0,
            sp: 0.0,
        }
    } else {
        SphereAngles {
            ct: c[2].clamp(-1.0, 1.0),
            st,
            cp: c[0] / st,
            sp: c[1] / st,
        }
    }
}

/// cos(mφ), sin(mφ) for m = 0..=mmax by angle addition.
fn azimuthal_table(cp: f64, sp: f64, mmax: u32) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(mmax as usize + 1);
    out.push((1.0, 0.0));
    for m in 1..=mmax {
        let (cm, sm) = out[(m - 1) as usize];
        out.push((cm * cp - sm * sp, sm * cp + cm * sp));
    }
    out
}

/// Value of the real harmonic Y_{l,m} (probability-orthonormal) at a point.
pub fn s2_harmonic(l: u32, m: i32, p: &SpherePoint) -> f64 {
    let a = angles(p);
    let ma = m.unsigned_abs();
    if ma > l {
        return 0.0;
    }
    let col = legendre_column(ma, l, a.ct);
    let plm = col[(l - ma) as usize];
    let az = azimuthal_table(a.cp, a.sp, ma)[ma as usize];
    let angular = match m.cmp(&0) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Greater => std::f64::consts::SQRT_2 * az.0,
        std::cmp::Ordering::Less => std::f64::consts::SQRT_2 * az.1,
    };
    s2_norm(l, ma) * plm * angular
}

/// |∇Y_{l,m}| at a point (the intrinsic gradient of the round sphere).
pub fn s2_harmonic_grad_norm(l: u32, m: i32, p: &SpherePoint) -> f64 {
    let a = angles(p);
    let ma = m.unsigned_abs();
    let st = a.st.max(1e-9);
    let col = legendre_column(ma, l, a.ct);
    let plm = col[(l - ma) as usize];
    let plm_prev = if l == ma {
        0.0
    } else {
        col[(l - ma - 1) as usize]
    };
    // dP_l^m(cos θ)/dθ = -((l+m) P_{l-1}^m - l cosθ P_l^m)/sinθ
    let dtheta_p = -(((l + ma) as f64) * plm_prev - (l as f64) * a.ct * plm) / st;
    let az = azimuthal_table(a.cp, a.sp, ma)[ma as usize];
    let (ang, dang) = match m.cmp(&0) {
        std::cmp::Ordering::Equal => (1.0, 0.0),
        std::cmp::Ordering::Greater => (
            std::f64::consts::SQRT_2 * az.0,
            -std::f64::consts::SQRT_2 * ma as f64 * az.1,
        ),
        std::cmp::Ordering::Less => (
            std::f64::consts::SQRT_2 * az.1,
            std::f64::consts::SQRT_2 * ma as f64 * az.0,
        ),
    };
    let n = s2_norm(l, ma);
    let grad_theta = n * dtheta_p * ang;
    let grad_phi = n * plm * dang / st;
    (grad_theta * grad_theta + grad_phi * grad_phi).sqrt()
}

// ---------------------------------------------------------------------------
// hyperspherical harmonics on S³
// ---------------------------------------------------------------------------

/// Gegenbauer C_k^{(alpha)}(x).
fn gegenbauer(k: u32, alpha: f64, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0 * alpha * x,
        _ => {
            let mut c0 = 1.0;
            let mut c1 = 2.0 * alpha * x;
            for n in 2..=k {
                let nf = n as f64;
                let c2 = (2.0 * (nf + alpha - 1.0) * x * c1 - (nf + 2.0 * alpha - 2.0) * c0) / nf;
                c0 = c1;
                c1 = c2;
            }
            c1
        }
    }
}

fn gegenbauer_derivative(k: u32, alpha: f64, x: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        2.0 * alpha * gegenbauer(k - 1, alpha + 1.0, x)
    }
}

fn split_s3(p: &SpherePoint) -> (f64, f64, SpherePoint) {
    let c = p.coords();
    let cchi = c[0].clamp(-1.0, 1.0);
    let schi = (c[1] * c[1] + c[2] * c[2] + c[3] * c[3]).sqrt();
    let u = if schi < 1e-290 {
        SpherePoint::north_pole(2)
    } else {
        SpherePoint::normalized([c[1] / schi, c[2] / schi, c[3] / schi].as_slice())
            .expect("unit direction")
    };
    (cchi, schi, u)
}

/// Radial factor sin^j(χ) C_{l-j}^{(j+1)}(cos χ) and its χ-derivative.
fn s3_radial(l: u32, j: u32, cchi: f64, schi: f64) -> (f64, f64) {
    let alpha = (j + 1) as f64;
    let c = gegenbauer(l - j, alpha, cchi);
    let dc = gegenbauer_derivative(l - j, alpha, cchi);
    let sj = schi.powi(j as i32);
    let value = sj * c;
    let sjm1 = if j == 0 { 0.0 } else { schi.powi(j as i32 - 1) };
    let derivative = (j as f64) * sjm1 * cchi * c - sj * schi * dc;
    (value, derivative)
}

// ---------------------------------------------------------------------------
// dictionary
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum FnSpec {
    S2 { l: u32, m: i32 },
    S3 { l: u32, j: u32, m: i32, scale: f64 },
}

/// One dictionary member with its precomputed constants.
#[derive(Debug, Clone)]
pub struct DictionaryFn {
    id: String,
    degree: u32,
    spec: FnSpec,
    grad_sup: f64,
    grad_norm_n: f64,
}

impl DictionaryFn {
    pub fn degree(&self) -> u32 {
        self.degree
    }

    fn eval_raw(&self, p: &SpherePoint) -> f64 {
        match &self.spec {
            FnSpec::S2 { l, m } => s2_harmonic(*l, *m, p),
            FnSpec::S3 { l, j, m, scale } => {
                let (cchi, schi, u) = split_s3(p);
                let (radial, _) = s3_radial(*l, *j, cchi, schi);
                scale * radial * s2_harmonic(*j, *m, &u)
            }
        }
    }

    fn grad_norm_at(&self, p: &SpherePoint) -> f64 {
        match &self.spec {
            FnSpec::S2 { l, m } => s2_harmonic_grad_norm(*l, *m, p),
            FnSpec::S3 { l, j, m, scale } => {
                let (cchi, schi, u) = split_s3(p);
                let (radial, dradial) = s3_radial(*l, *j, cchi, schi);
                let y = s2_harmonic(*j, *m, &u);
                let gy = if *j == 0 {
                    0.0
                } else {
                    s2_harmonic_grad_norm(*j, *m, &u)
                };
                let s = schi.max(1e-9);
                let t_chi = scale * dradial * y;
                let t_ang = scale * radial * gy / s;
                (t_chi * t_chi + t_ang * t_ang).sqrt()
            }
        }
    }
}

impl Observable for DictionaryFn {
    fn id(&self) -> &str {
        &self.id
    }
    fn eval(&self, p: &SpherePoint) -> f64 {
        self.eval_raw(p)
    }
    fn grad_sup(&self) -> f64 {
        self.grad_sup
    }
    fn grad_norm_n(&self) -> f64 {
        self.grad_norm_n
    }
}

/// The smooth test dictionary: mean-zero harmonics up to a degree cap.
#[derive(Debug, Clone)]
pub struct TestDictionary {
    dim: usize,
    degree_max: u32,
    functions: Vec<DictionaryFn>,
}

impl TestDictionary {
    /// Real spherical harmonics of degree 1..=degree_max on S².
    pub fn s2(degree_max: u32) -> Self {
        let quad = sphere_product_rule(64, 160);
        let sup_grid: Vec<SpherePoint> = fibonacci_lattice(4096);
        let mut functions = Vec::new();
        for l in 1..=degree_max {
            for m in -(l as i32)..=(l as i32) {
                let spec = FnSpec::S2 { l, m };
                let grad_norm_n = quad
                    .iter()
                    .map(|(p, w)| w * s2_harmonic_grad_norm(l, m, p).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let grad_sup = quad
                    .iter()
                    .map(|(p, _)| s2_harmonic_grad_norm(l, m, p))
                    .chain(sup_grid.iter().map(|p| s2_harmonic_grad_norm(l, m, p)))
                    .fold(0.0, f64::max);
                functions.push(DictionaryFn {
                    id: format!("y_{l}_{m}"),
                    degree: l,
                    spec,
                    grad_sup,
                    grad_norm_n,
                });
            }
        }
        TestDictionary {
            dim: 2,
            degree_max,
            functions,
        }
    }

    /// Hyperspherical harmonics of degree 1..=degree_max on S³.
    pub fn s3(degree_max: u32) -> Self {
        let gl = gauss_legendre(64);
        let half_pi = std::f64::consts::PI / 2.0;
        let quad = three_sphere_product_rule(32, 16, 32);
        let mut functions = Vec::new();
        for l in 1..=degree_max {
            for j in 0..=l {
                // probability normalization of the radial factor:
                // (2/π) ∫ (sin^j χ C(cos χ))² sin²χ dχ = 1/scale²
                let norm2: f64 = gl
                    .iter()
                    .map(|&(t, wt)| {
                        let chi = half_pi * (t + 1.0);
                        let (r, _) = s3_radial(l, j, chi.cos(), chi.sin());
                        (2.0 / std::f64::consts::PI) * half_pi * wt * r * r * chi.sin().powi(2)
                    })
                    .sum();
                let scale = 1.0 / norm2.sqrt();
                for m in -(j as i32)..=(j as i32) {
                    let f = DictionaryFn {
                        id: format!("xi_{l}_{j}_{m}"),
                        degree: l,
                        spec: FnSpec::S3 { l, j, m, scale },
                        grad_sup: 0.0,
                        grad_norm_n: 0.0,
                    };
                    let grad_norm_n = quad
                        .iter()
                        .map(|(p, w)| w * f.grad_norm_at(p).powi(3))
                        .sum::<f64>()
                        .powf(1.0 / 3.0);
                    let grad_sup = quad
                        .iter()
                        .map(|(p, _)| f.grad_norm_at(p))
                        .fold(0.0, f64::max);
                    functions.push(DictionaryFn {
                        grad_sup,
                        grad_norm_n,
                        ..f
                    });
                }
            }
        }
        TestDictionary {
            dim: 3,
            degree_max,
            functions,
        }
    }

    /// Dictionary for the sphere dimension of the given map domain.
    pub fn for_dimension(dim: usize, degree_max: u32) -> Self {
        match dim {
            2 => Self::s2(degree_max),
            3 => Self::s3(degree_max),
            other => panic!("no dictionary for S^{other}"),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree_max(&self) -> u32 {
        self.degree_max
    }

    pub fn functions(&self) -> &[DictionaryFn] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn find(&self, id: &str) -> Option<&DictionaryFn> {
        self.functions.iter().find(|f| f.id == id)
    }

    /// ∫ φ dμ for every dictionary member, sharing the per-point tables.
    pub fn integrate_all(&self, mu: &DiscreteMeasure) -> Vec<f64> {
        use rayon::prelude::*;
        // accumulate per-chunk in fixed order, then sum chunks in order
        let chunks: Vec<Vec<f64>> = mu
            .atoms()
            .par_chunks(2048)
            .map(|chunk| {
                let mut acc = vec![0.0; self.functions.len()];
                let mut values = vec![0.0; self.functions.len()];
                for a in chunk {
                    self.eval_all(&a.point, &mut values);
                    for (s, v) in acc.iter_mut().zip(values.iter()) {
                        *s += a.weight * v;
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![0.0; self.functions.len()];
        for chunk in chunks {
            for (s, v) in out.iter_mut().zip(chunk.iter()) {
                *s += v;
            }
        }
        out
    }

    /// Evaluate every member at one point into `out` (resized as needed).
    pub fn eval_all(&self, p: &SpherePoint, out: &mut Vec<f64>) {
        out.resize(self.functions.len(), 0.0);
        match self.dim {
            2 => {
                let a = angles(p);
                let lmax = self.degree_max;
                let az = azimuthal_table(a.cp, a.sp, lmax);
                // per-m Legendre columns
                let mut idx = 0;
                let mut cols: Vec<Vec<f64>> = Vec::with_capacity(lmax as usize + 1);
                for m in 0..=lmax {
                    cols.push(legendre_column(m, lmax, a.ct));
                }
                for l in 1..=lmax {
                    for m in -(l as i32)..=(l as i32) {
                        let ma = m.unsigned_abs();
                        let plm = cols[ma as usize][(l - ma) as usize];
                        let angular = match m.cmp(&0) {
                            std::cmp::Ordering::Equal => 1.0,
                            std::cmp::Ordering::Greater => {
                                std::f64::consts::SQRT_2 * az[ma as usize].0
                            }
                            std::cmp::Ordering::Less => {
                                std::f64::consts::SQRT_2 * az[ma as usize].1
                            }
                        };
                        out[idx] = s2_norm(l, ma) * plm * angular;
                        idx += 1;
                    }
                }
            }
            _ => {
                for (i, f) in self.functions.iter().enumerate() {
                    out[i] = f.eval_raw(p);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Chebyshev observables on the chart's real axis
// ---------------------------------------------------------------------------

/// T_m(x/2) read off the real part of the chart coordinate. Orthogonal
/// family for measures on the segment [-2, 2]; used by the mixing statistic
/// for interval maps. Not a dictionary member (its sphere mean is not zero).
#[derive(Debug, Clone)]
pub struct ChebyshevObservable {
    id: String,
    m: u32,
    grad_sup: f64,
}

impl ChebyshevObservable {
    pub fn new(m: u32) -> Self {
        // sampled sup of the sphere gradient along the segment:
        // |T_m'(x/2)/2| times the chart-to-chordal factor (1+x²)/2
        let grad_sup = (0..=2000)
            .map(|i| {
                let x = -2.0 + 4.0 * i as f64 / 2000.0;
                let t = (x / 2.0).clamp(-1.0, 1.0).acos();
                // |d/dx T_m(x/2)| = m |sin(m t)| / (2 sin t), t = acos(x/2)
                let s = t.sin().max(1e-6);
                let d = m as f64 * (m as f64 * t).sin().abs() / (2.0 * s);
                d * (1.0 + x * x) / 2.0
            })
            .fold(0.0, f64::max)
            .max(m as f64 * m as f64 / 2.0); // endpoint limit |T_m'| = m²/2
        ChebyshevObservable {
            id: format!("cheb_{m}"),
            m,
            grad_sup,
        }
    }

    pub fn order(&self) -> u32 {
        self.m
    }
}

impl Observable for ChebyshevObservable {
    fn id(&self) -> &str {
        &self.id
    }

    fn eval(&self, p: &SpherePoint) -> f64 {
        let x = match stereo_project(p) {
            Ok(ChartPoint::Finite(z)) => z.re,
            _ => return 0.0,
        };
        // T_m(x/2) by the recurrence T_{k+1} = x T_k - T_{k-1} on [-2,2]
        let mut t0 = 1.0;
        let mut t1 = x / 2.0;
        if self.m == 0 {
            return t0;
        }
        for _ in 1..self.m {
            let t2 = x * t1 - t0;
            t0 = t1;
            t1 = t2;
        }
        t1
    }

    fn grad_sup(&self) -> f64 {
        self.grad_sup
    }

    fn grad_norm_n(&self) -> f64 {
        self.grad_sup
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{sample_uniform, stereo_lift};

    #[test]
    fn s2_dictionary_is_orthonormal_and_mean_zero() {
        let dict = TestDictionary::s2(4);
        assert_eq!(dict.len(), 24); // sum of 2l+1, l=1..4
        let quad = sphere_product_rule(48, 96);
        for f in dict.functions() {
            let mean: f64 = quad.iter().map(|(p, w)| w * f.eval(p)).sum();
            let second: f64 = quad.iter().map(|(p, w)| w * f.eval(p).powi(2)).sum();
            assert!(mean.abs() < 1e-6, "{}: mean {mean}", f.id());
            assert!((second - 1.0).abs() < 1e-10, "{}: norm² {second}", f.id());
        }
    }

    #[test]
    fn s2_cross_orthogonality_spot_checks() {
        let dict = TestDictionary::s2(3);
        let quad = sphere_product_rule(48, 96);
        for (i, f) in dict.functions().iter().enumerate() {
            for g in dict.functions().iter().skip(i + 1) {
                let inner: f64 = quad.iter().map(|(p, w)| w * f.eval(p) * g.eval(p)).sum();
                assert!(inner.abs() < 1e-10, "{} · {} = {inner}", f.id(), g.id());
            }
        }
    }

    #[test]
    fn gradient_l2_norm_matches_eigenvalue() {
        // ∫|∇Y_l|² dω = l(l+1) for probability-orthonormal harmonics
        let dict = TestDictionary::s2(8);
        for f in dict.functions() {
            let l = f.degree() as f64;
            let expected = (l * (l + 1.0)).sqrt();
            assert!(
                (f.grad_norm_n() - expected).abs() < 1e-8 * expected.max(1.0),
                "{}: ‖∇φ‖₂ = {} vs sqrt(l(l+1)) = {}",
                f.id(),
                f.grad_norm_n(),
                expected
            );
        }
    }

    #[test]
    fn batch_evaluation_agrees_with_single() {
        let dict = TestDictionary::s2(8);
        let mut values = Vec::new();
        for p in sample_uniform(2, 200, 404) {
            dict.eval_all(&p, &mut values);
            for (f, v) in dict.functions().iter().zip(values.iter()) {
                assert!((f.eval(&p) - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn low_harmonics_are_the_coordinates() {
        // Y_1_0 = sqrt(3) z, Y_1_1 = sqrt(3) x, Y_1_-1 = sqrt(3) y
        let s3 = 3.0_f64.sqrt();
        for p in sample_uniform(2, 50, 1) {
            let c = p.coords();
            assert!((s2_harmonic(1, 0, &p) - s3 * c[2]).abs() < 1e-12);
            assert!((s2_harmonic(1, 1, &p) - s3 * c[0]).abs() < 1e-12);
            assert!((s2_harmonic(1, -1, &p) - s3 * c[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let dict = TestDictionary::s2(5);
        let h = 1e-6;
        for p in sample_uniform(2, 30, 77) {
            // two orthonormal tangent directions at p
            let c = p.coords();
            let mut e1 = [-c[1], c[0], 0.0];
            let n1 = (e1[0] * e1[0] + e1[1] * e1[1]).sqrt();
            if n1 < 1e-3 {
                continue; // too close to the poles for this simple frame
            }
            e1 = [e1[0] / n1, e1[1] / n1, 0.0];
            let e2 = [
                c[1] * e1[2] - c[2] * e1[1],
                c[2] * e1[0] - c[0] * e1[2],
                c[0] * e1[1] - c[1] * e1[0],
            ];
            for f in dict.functions().iter().step_by(5) {
                let fd = |dir: &[f64; 3]| {
                    let q = SpherePoint::normalized(
                        [c[0] + h * dir[0], c[1] + h * dir[1], c[2] + h * dir[2]].as_slice(),
                    )
                    .unwrap();
                    (f.eval(&q) - f.eval(&p)) / h
                };
                let g = (fd(&e1).powi(2) + fd(&e2).powi(2)).sqrt();
                let analytic = f.grad_norm_at(&p);
                assert!(
                    (g - analytic).abs() < 1e-3 * (1.0 + analytic),
                    "{} at {:?}: fd {} vs analytic {}",
                    f.id(),
                    c,
                    g,
                    analytic
                );
            }
        }
    }

    #[test]
    fn s3_dictionary_is_orthonormal_and_mean_zero() {
        let dict = TestDictionary::s3(3);
        assert_eq!(dict.len(), 4 + 9 + 16); // Σ_{l=1}^{3} (l+1)²
        let quad = three_sphere_product_rule(40, 20, 40);
        for f in dict.functions() {
            let mean: f64 = quad.iter().map(|(p, w)| w * f.eval(p)).sum();
            let second: f64 = quad.iter().map(|(p, w)| w * f.eval(p).powi(2)).sum();
            assert!(mean.abs() < 1e-6, "{}: mean {mean}", f.id());
            assert!((second - 1.0).abs() < 1e-6, "{}: norm² {second}", f.id());
        }
    }

    #[test]
    fn chebyshev_observables_on_the_segment() {
        let t2 = ChebyshevObservable::new(2);
        // T_2(x/2) = x²/2 - 1 on the segment
        for i in 0..=20 {
            let x = -2.0 + 0.2 * i as f64;
            let p = stereo_lift(ChartPoint::finite(x, 0.0));
            assert!((t2.eval(&p) - (x * x / 2.0 - 1.0)).abs() < 1e-12);
        }
        assert!(t2.grad_sup() > 0.0);
    }
}
