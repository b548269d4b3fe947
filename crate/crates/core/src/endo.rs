//! Sphere endomorphisms: forward evaluation, topological degree, and complete
//! preimage solving with local indices.
//!
//! The concrete family on S² is the rational maps, evaluated in the
//! stereographic chart with the point at infinity handled exactly: a preimage
//! at ∞ exists precisely when the pencil `p - y·q` drops degree, and the
//! degree drop is its local index.

use num_complex::Complex64;

use crate::error::{MapError, PreimageError};
use crate::poly::{solve_roots, Poly, RootsOutcome};
use crate::sphere::{stereo_lift, stereo_project, ChartPoint, SpherePoint};
use crate::tolerances::{
    AMBIGUOUS_RESIDUAL_HI, AMBIGUOUS_RESIDUAL_LO, ATOM_MERGE_TOL, CRITICAL_TARGET_PERTURBATION,
    FORWARD_RESIDUAL_TOL, LEAD_COEFF_TRIM, RESULTANT_TOL, ROOT_RESIDUAL_TOL,
};

/// The quantitative face of an endomorphism: sphere dimension n, topological
/// degree d ≥ 2, and a distortion constant K ≥ 1 valid for all iterates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Descriptor {
    pub dimension: usize,
    pub degree: u32,
    pub distortion: f64,
}

/// One preimage with its local index (multiplicity).
#[derive(Debug, Clone)]
pub struct PreimageAtom {
    pub point: SpherePoint,
    pub index: u32,
}

/// The complete solution set of `f(x) = y`, indices summing to the degree.
#[derive(Debug, Clone)]
pub struct PreimageSet {
    atoms: Vec<PreimageAtom>,
}

impl PreimageSet {
    /// Merge coincident atoms (chordal distance below the merge tolerance,
    /// indices added) and require the index sum to be exactly `degree`.
    pub fn new(atoms: Vec<PreimageAtom>, degree: u32) -> Result<Self, PreimageError> {
        let mut merged: Vec<PreimageAtom> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            match merged
                .iter_mut()
                .find(|m| m.point.chordal_distance(&atom.point) < ATOM_MERGE_TOL)
            {
                Some(m) => m.index += atom.index,
                None => merged.push(atom),
            }
        }
        merged.sort_by(|a, b| a.point.lex_cmp(&b.point));
        let got: u32 = merged.iter().map(|a| a.index).sum();
        if got != degree {
            return Err(PreimageError::IndexSumMismatch {
                got,
                expected: degree,
            });
        }
        Ok(PreimageSet { atoms: merged })
    }

    pub fn atoms(&self) -> &[PreimageAtom] {
        &self.atoms
    }

    pub fn index_sum(&self) -> u32 {
        self.atoms.iter().map(|a| a.index).sum()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// A continuous open map of Sⁿ with a well-defined degree: the interface the
/// pullback machinery and all statistics run on.
pub trait Endomorphism: Send + Sync {
    fn descriptor(&self) -> Descriptor;

    /// Forward evaluation; total on the sphere.
    fn evaluate(&self, x: &SpherePoint) -> SpherePoint;

    /// Complete preimage set of `y` with local indices summing to the degree.
    fn preimages(&self, y: &SpherePoint) -> Result<PreimageSet, PreimageError>;

    /// Seeds for the exceptional-point search: periodic points of period up
    /// to `max_period` plus chart-distinguished points. Default: the poles.
    fn exceptional_candidates(&self, _max_period: u32) -> Vec<SpherePoint> {
        let n = self.descriptor().dimension;
        vec![SpherePoint::north_pole(n), SpherePoint::south_pole(n)]
    }

    fn dimension(&self) -> usize {
        self.descriptor().dimension
    }

    fn degree(&self) -> u32 {
        self.descriptor().degree
    }

    fn distortion(&self) -> f64 {
        self.descriptor().distortion
    }
}

/// `f` iterated `k` times at `x`.
pub fn iterate(f: &dyn Endomorphism, x: &SpherePoint, k: usize) -> SpherePoint {
    let mut p = x.clone();
    for _ in 0..k {
        p = f.evaluate(&p);
    }
    p
}

/// Check that preimage indices sum to the degree at `trials` uniform targets.
///
/// Index-sum violations count as failure; other solver errors propagate.
pub fn verify_degree(
    f: &dyn Endomorphism,
    trials: usize,
    seed: u64,
) -> Result<bool, PreimageError> {
    for y in crate::sphere::sample_uniform(f.dimension(), trials, seed) {
        match f.preimages(&y) {
            Ok(_) => {}
            Err(PreimageError::IndexSumMismatch { .. }) => return Ok(false),
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

/// A rational self-map of S² = ℂ ∪ {∞}, reduced to lowest terms.
///
/// Rational maps are 1-quasiregular, so the distortion constant is exactly 1.
#[derive(Debug, Clone)]
pub struct RationalMap {
    /// Numerator and denominator, zero-padded to a common length `degree+1`.
    numer: Vec<Complex64>,
    denom: Vec<Complex64>,
    numer_deg: usize,
    denom_deg: usize,
    degree: u32,
}

impl RationalMap {
    pub fn new(numer: Vec<Complex64>, denom: Vec<Complex64>) -> Result<Self, MapError> {
        let p = Poly::new(numer).trim_relative(LEAD_COEFF_TRIM);
        let q = Poly::new(denom).trim_relative(LEAD_COEFF_TRIM);
        if q.is_zero() {
            return Err(MapError::ZeroDenominator);
        }
        if p.is_zero() {
            // constant zero map has degree 0
            return Err(MapError::DegreeTooLow(0));
        }
        let degree = p.degree().max(q.degree());
        if degree < 2 {
            return Err(MapError::DegreeTooLow(degree as u32));
        }

        // joint normalization: the largest coefficient has magnitude 1
        let scale = p.max_coeff_norm().max(q.max_coeff_norm());
        let p = p.scale(Complex64::new(1.0 / scale, 0.0));
        let q = q.scale(Complex64::new(1.0 / scale, 0.0));

        let magnitude = normalized_resultant(&p, &q);
        if magnitude <= RESULTANT_TOL {
            return Err(MapError::CommonFactor {
                magnitude,
                tol: RESULTANT_TOL,
            });
        }
        Ok(Self::reduced_unchecked(p, q))
    }

    /// Polynomial map `z ↦ Σ coeffs[k] z^k` (ascending real coefficients).
    pub fn polynomial(coeffs: &[f64]) -> Result<Self, MapError> {
        RationalMap::new(
            coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
            vec![Complex64::ONE],
        )
    }

    /// The power map `z ↦ z^d`.
    pub fn z_power(d: u32) -> Self {
        let mut numer = vec![Complex64::ZERO; d as usize + 1];
        numer[d as usize] = Complex64::ONE;
        RationalMap::new(numer, vec![Complex64::ONE]).expect("power map is reduced")
    }

    /// Internal constructor for maps already in lowest terms (compositions of
    /// reduced maps stay reduced).
    fn reduced_unchecked(p: Poly, q: Poly) -> Self {
        let numer_deg = p.degree();
        let denom_deg = q.degree();
        let degree = numer_deg.max(denom_deg);
        let mut numer = p.coeffs().to_vec();
        let mut denom = q.coeffs().to_vec();
        numer.resize(degree + 1, Complex64::ZERO);
        denom.resize(degree + 1, Complex64::ZERO);
        RationalMap {
            numer,
            denom,
            numer_deg,
            denom_deg,
            degree: degree as u32,
        }
    }

    pub fn numerator(&self) -> Poly {
        Poly::new(self.numer.clone())
    }

    pub fn denominator(&self) -> Poly {
        Poly::new(self.denom.clone())
    }

    pub fn is_polynomial(&self) -> bool {
        self.denom_deg == 0
    }

    /// Evaluate in the chart, with exact handling of ∞ and of huge arguments
    /// via coefficient reversal.
    pub fn eval_chart(&self, z: ChartPoint) -> ChartPoint {
        match z {
            ChartPoint::Infinity => self.value_at_infinity(),
            ChartPoint::Finite(z) if z.norm() > 1e8 => {
                // p(z)/q(z) = p_rev(1/z)/q_rev(1/z) after padding to equal length
                let u = z.inv();
                let pn = eval_reversed(&self.numer, u);
                let qn = eval_reversed(&self.denom, u);
                divide_to_chart(pn, qn)
            }
            ChartPoint::Finite(z) => {
                let pn = eval_ascending(&self.numer, z);
                let qn = eval_ascending(&self.denom, z);
                divide_to_chart(pn, qn)
            }
        }
    }

    fn value_at_infinity(&self) -> ChartPoint {
        use std::cmp::Ordering::*;
        match self.numer_deg.cmp(&self.denom_deg) {
            Greater => ChartPoint::Infinity,
            Less => ChartPoint::Finite(Complex64::ZERO),
            Equal => divide_to_chart(self.numer[self.numer_deg], self.denom[self.denom_deg]),
        }
    }

    /// Derivative in the chart at a finite non-pole point.
    pub fn chart_derivative(&self, z: Complex64) -> Complex64 {
        let p = Poly::new(self.numer.clone());
        let q = Poly::new(self.denom.clone());
        let (pv, dpv) = p.eval_with_derivative(z);
        let (qv, dqv) = q.eval_with_derivative(z);
        (dpv * qv - pv * dqv) / (qv * qv)
    }

    /// Complete chart preimages of `w` as (chart point, local index) pairs.
    pub fn preimages_chart(&self, w: ChartPoint) -> Result<Vec<(ChartPoint, u32)>, PreimageError> {
        let d = self.degree as usize;
        match w {
            ChartPoint::Infinity => {
                // poles of the map, plus ∞ itself when numerator dominates
                let mut out = Vec::new();
                if self.denom_deg > 0 {
                    let q = Poly::new(self.denom.clone());
                    let outcome = checked_roots(&q)?;
                    for cl in &outcome.clusters {
                        out.push((ChartPoint::Finite(cl.center), cl.multiplicity));
                    }
                }
                if self.numer_deg > self.denom_deg {
                    out.push((
                        ChartPoint::Infinity,
                        (self.numer_deg - self.denom_deg) as u32,
                    ));
                }
                Ok(out)
            }
            ChartPoint::Finite(w) => {
                let pencil = self.pencil(w);
                let trimmed = pencil.trim_relative(LEAD_COEFF_TRIM);
                let finite_deg = trimmed.degree();
                let inf_index = (d - finite_deg) as u32;

                let outcome = self.solve_pencil_checked(&trimmed, w)?;
                let mut out: Vec<(ChartPoint, u32)> = outcome
                    .clusters
                    .iter()
                    .map(|cl| (ChartPoint::Finite(cl.center), cl.multiplicity))
                    .collect();
                if inf_index > 0 {
                    out.push((ChartPoint::Infinity, inf_index));
                }
                Ok(out)
            }
        }
    }

    /// The root pencil `p - w q`, scaled by `1/max(1,|w|)` for conditioning.
    fn pencil(&self, w: Complex64) -> Poly {
        let s = 1.0 / w.norm().max(1.0);
        Poly::new(
            self.numer
                .iter()
                .zip(self.denom.iter())
                .map(|(&pc, &qc)| (pc - w * qc) * s)
                .collect(),
        )
    }

    /// Solve the pencil; in the ambiguous residual band retry at a target
    /// perturbed by 1e-9 to confirm the root count, reporting the clustering
    /// of the unperturbed solve.
    fn solve_pencil_checked(
        &self,
        pencil: &Poly,
        w: Complex64,
    ) -> Result<RootsOutcome, PreimageError> {
        let outcome = checked_roots_lenient(pencil);
        if outcome.worst_residual <= AMBIGUOUS_RESIDUAL_LO {
            return Ok(outcome);
        }
        if outcome.worst_residual < AMBIGUOUS_RESIDUAL_HI {
            let w2 = w + Complex64::new(
                CRITICAL_TARGET_PERTURBATION * (1.0 + w.norm()),
                CRITICAL_TARGET_PERTURBATION * (1.0 + w.norm()),
            );
            let perturbed = self.pencil(w2).trim_relative(LEAD_COEFF_TRIM);
            let retry = checked_roots_lenient(&perturbed);
            if retry.worst_residual <= ROOT_RESIDUAL_TOL
                && retry.total_multiplicity() == outcome.total_multiplicity()
            {
                return Ok(outcome);
            }
        }
        let converged = outcome
            .clusters
            .iter()
            .filter(|c| c.residual <= ROOT_RESIDUAL_TOL)
            .count();
        Err(PreimageError::NonConvergence {
            residual: outcome.worst_residual,
            converged,
            total: outcome.clusters.len(),
        })
    }

    /// Composition `self ∘ inner` as a rational map (degrees multiply).
    pub fn compose(&self, inner: &RationalMap) -> RationalMap {
        let r = Poly::new(inner.numer.clone());
        let s = Poly::new(inner.denom.clone());
        let d = self.degree as usize;

        // powers r^i s^{d-i}
        let mut r_pows = vec![Poly::new(vec![Complex64::ONE])];
        let mut s_pows = vec![Poly::new(vec![Complex64::ONE])];
        for i in 1..=d {
            r_pows.push(r_pows[i - 1].mul(&r));
            s_pows.push(s_pows[i - 1].mul(&s));
        }
        let mut num = Poly::new(vec![Complex64::ZERO]);
        let mut den = Poly::new(vec![Complex64::ZERO]);
        for i in 0..=d {
            let basis = r_pows[i].mul(&s_pows[d - i]);
            num = num.add(&basis.scale(self.numer[i]));
            den = den.add(&basis.scale(self.denom[i]));
        }
        let scale = num.max_coeff_norm().max(den.max_coeff_norm());
        let num = num.scale(Complex64::new(1.0 / scale, 0.0));
        let den = den.scale(Complex64::new(1.0 / scale, 0.0));
        RationalMap::reduced_unchecked(
            num.trim_relative(LEAD_COEFF_TRIM),
            den.trim_relative(LEAD_COEFF_TRIM),
        )
    }

    /// `self` composed with itself `k` times (k >= 1).
    pub fn iterate_map(&self, k: u32) -> RationalMap {
        assert!(k >= 1);
        let mut acc = self.clone();
        for _ in 1..k {
            acc = self.compose(&acc);
        }
        acc
    }

    /// Fixed points of `f^period` in the chart (finite solutions plus ∞ when
    /// it is fixed).
    pub fn periodic_points_chart(&self, period: u32) -> Vec<ChartPoint> {
        let fm = if period == 1 {
            self.clone()
        } else {
            self.iterate_map(period)
        };
        // num(z) - z den(z) = 0
        let z_den =
            Poly::new(fm.denom.clone()).mul(&Poly::new(vec![Complex64::ZERO, Complex64::ONE]));
        let eqn = Poly::new(fm.numer.clone()).sub(&z_den);
        let outcome = solve_roots(&eqn.trim_relative(LEAD_COEFF_TRIM));
        let mut out: Vec<ChartPoint> = outcome
            .clusters
            .iter()
            .filter(|cl| cl.residual <= 1e-6)
            .map(|cl| ChartPoint::Finite(cl.center))
            .collect();
        if fm.value_at_infinity().is_infinity() {
            out.push(ChartPoint::Infinity);
        }
        out
    }

    /// Multiplier |(f^period)'| at a finite periodic chart point, as the
    /// product of |f'| along the orbit.
    pub fn orbit_multiplier(&self, z: Complex64, period: u32) -> f64 {
        let mut acc = 1.0;
        let mut current = z;
        for _ in 0..period {
            acc *= self.chart_derivative(current).norm();
            match self.eval_chart(ChartPoint::Finite(current)) {
                ChartPoint::Finite(next) => current = next,
                ChartPoint::Infinity => return f64::INFINITY,
            }
        }
        acc
    }
}

fn eval_ascending(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

fn eval_reversed(coeffs: &[Complex64], u: Complex64) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for &c in coeffs.iter() {
        acc = acc * u + c;
    }
    acc
}

fn divide_to_chart(num: Complex64, den: Complex64) -> ChartPoint {
    if den.norm() == 0.0 {
        return ChartPoint::Infinity;
    }
    let v = num / den;
    if v.re.is_finite() && v.im.is_finite() {
        ChartPoint::Finite(v)
    } else {
        ChartPoint::Infinity
    }
}

fn checked_roots(p: &Poly) -> Result<RootsOutcome, PreimageError> {
    let outcome = solve_roots(p);
    if outcome.worst_residual > ROOT_RESIDUAL_TOL {
        let converged = outcome
            .clusters
            .iter()
            .filter(|c| c.residual <= ROOT_RESIDUAL_TOL)
            .count();
        return Err(PreimageError::NonConvergence {
            residual: outcome.worst_residual,
            converged,
            total: outcome.clusters.len(),
        });
    }
    Ok(outcome)
}

fn checked_roots_lenient(p: &Poly) -> RootsOutcome {
    solve_roots(p)
}

/// |Res(p, q)| normalized by coefficient norms, computed from the roots of
/// the lower-degree factor. Zero (or near zero) flags a common factor.
fn normalized_resultant(p: &Poly, q: &Poly) -> f64 {
    let (a, b) = if p.degree() <= q.degree() {
        (p, q)
    } else {
        (q, p)
    };
    if a.degree() == 0 {
        return 1.0; // a nonzero constant shares no root with anything
    }
    let outcome = solve_roots(a);
    let lead = a.coeffs()[a.degree()].norm();
    let mut log_res = (b.degree() as f64) * lead.ln();
    for cl in &outcome.clusters {
        log_res += (cl.multiplicity as f64) * b.eval(cl.center).norm().ln();
    }
    let log_norm = (b.degree() as f64) * a.max_coeff_norm().ln()
        + (a.degree() as f64) * b.max_coeff_norm().ln();
    ((log_res - log_norm).exp()).min(1.0)
}

impl Endomorphism for RationalMap {
    fn descriptor(&self) -> Descriptor {
        Descriptor {
            dimension: 2,
            degree: self.degree,
            distortion: 1.0,
        }
    }

    fn evaluate(&self, x: &SpherePoint) -> SpherePoint {
        let z = stereo_project(x).expect("rational maps act on the 2-sphere");
        stereo_lift(self.eval_chart(z))
    }

    fn preimages(&self, y: &SpherePoint) -> Result<PreimageSet, PreimageError> {
        let w = stereo_project(y).expect("rational maps act on the 2-sphere");
        let chart_atoms = self.preimages_chart(w)?;
        let mut atoms = Vec::with_capacity(chart_atoms.len());
        for (cp, index) in chart_atoms {
            let point = stereo_lift(cp);
            let residual = self.evaluate(&point).chordal_distance(y);
            if residual > FORWARD_RESIDUAL_TOL {
                return Err(PreimageError::ForwardResidual {
                    point: point.coords().to_vec(),
                    residual,
                });
            }
            atoms.push(PreimageAtom { point, index });
        }
        PreimageSet::new(atoms, self.degree)
    }

    fn exceptional_candidates(&self, max_period: u32) -> Vec<SpherePoint> {
        let mut out = vec![
            stereo_lift(ChartPoint::Finite(Complex64::ZERO)),
            stereo_lift(ChartPoint::Infinity),
        ];
        for m in 1..=max_period {
            for cp in self.periodic_points_chart(m) {
                out.push(stereo_lift(cp));
            }
        }
        out
    }
}
