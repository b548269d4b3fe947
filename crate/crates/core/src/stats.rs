//! Verification statistics for equilibrium measures.
//!
//! Weak distances against the test dictionary, balance and invariance
//! residuals, ball-mass scans for atoms, backward-orbit search for
//! exceptional points, Hausdorff comparison of supports with Julia
//! references, mixing correlations, and convergence-rate fits.

use rayon::prelude::*;

use crate::endo::Endomorphism;
use crate::error::{PreimageError, PullbackError};
use crate::harmonics::{Observable, TestDictionary};
use crate::measure::{pairwise_sum, DiscreteMeasure};
use crate::pullback::{pullback_trajectory, PullbackConfig};
use crate::sphere::SpherePoint;

/// Dictionary-normalized weak distance:
/// `max_φ |∫φ dμ − ∫φ dν| / (1 + sup|∇φ|)`.
///
/// A pseudometric: symmetric, triangle inequality by construction, zero iff
/// the measures agree on the dictionary span.
pub fn weak_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure, dict: &TestDictionary) -> f64 {
    let a = dict.integrate_all(mu);
    let b = dict.integrate_all(nu);
    dict.functions()
        .iter()
        .zip(a.iter().zip(b.iter()))
        .map(|(f, (x, y))| (x - y).abs() / (1.0 + f.grad_sup()))
        .fold(0.0, f64::max)
}

/// Balance defect tested weakly: `max_φ |∫ (f_*φ)/d dμ − ∫φ dμ|` with
/// `f_*φ(a) = Σ_{x ∈ f⁻¹(a)} i(x,f) φ(x)` from the preimage solver.
pub fn balance_residual(
    f: &dyn Endomorphism,
    mu: &DiscreteMeasure,
    dict: &TestDictionary,
) -> Result<f64, PullbackError> {
    let d = f.degree() as f64;
    let nfns = dict.len();
    let per_chunk: Result<Vec<Vec<f64>>, PullbackError> = mu
        .atoms()
        .par_chunks(512)
        .enumerate()
        .map(|(chunk_idx, chunk)| {
            let mut acc = vec![0.0; nfns];
            let mut push_vals = vec![0.0; nfns];
            let mut here_vals = vec![0.0; nfns];
            for (off, atom) in chunk.iter().enumerate() {
                let pre = f.preimages(&atom.point).map_err(|source| PullbackError {
                    level: 0,
                    atom_index: chunk_idx * 512 + off,
                    atom: atom.point.coords().to_vec(),
                    source,
                })?;
                push_vals.iter_mut().for_each(|v| *v = 0.0);
                let mut vals = vec![0.0; nfns];
                for pa in pre.atoms() {
                    dict.eval_all(&pa.point, &mut vals);
                    let idx = pa.index as f64;
                    for (p, v) in push_vals.iter_mut().zip(vals.iter()) {
                        *p += idx * v;
                    }
                }
                dict.eval_all(&atom.point, &mut here_vals);
                for ((a, p), h) in acc.iter_mut().zip(push_vals.iter()).zip(here_vals.iter()) {
                    *a += atom.weight * (p / d - h);
                }
            }
            Ok(acc)
        })
        .collect();
    let mut totals = vec![0.0; nfns];
    for chunk in per_chunk? {
        for (t, v) in totals.iter_mut().zip(chunk.iter()) {
            *t += v;
        }
    }
    Ok(totals.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Invariance defect tested weakly: `max_φ |∫ φ∘f dμ − ∫φ dμ|`.
pub fn invariance_residual(
    f: &dyn Endomorphism,
    mu: &DiscreteMeasure,
    dict: &TestDictionary,
) -> f64 {
    let pushed = crate::pullback::pushforward_measure(f, mu);
    let a = dict.integrate_all(&pushed);
    let b = dict.integrate_all(mu);
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// For each radius, the maximum over atom centers of the mass of the closed
/// chordal ball around that center. Small max ball mass at small radii is
/// the empirical signature of non-atomicity.
pub fn atom_scan(mu: &DiscreteMeasure, radii: &[f64]) -> Vec<(f64, f64)> {
    radii
        .iter()
        .map(|&r| {
            let max_mass = mu
                .atoms()
                .par_iter()
                .map(|center| {
                    mu.atoms()
                        .iter()
                        .filter(|a| a.point.chordal_distance(&center.point) <= r)
                        .map(|a| a.weight)
                        .sum::<f64>()
                })
                .reduce(|| 0.0, f64::max);
            (r, max_mass)
        })
        .collect()
}

/// Cardinality of the backward orbit of `a` explored to `depth` levels,
/// stopping early once it exceeds `bound` (returns `bound + 1` then).
pub fn backward_orbit_size(
    f: &dyn Endomorphism,
    a: &SpherePoint,
    depth: usize,
    bound: usize,
) -> Result<usize, PreimageError> {
    let mut orbit: Vec<SpherePoint> = vec![a.clone()];
    let mut frontier: Vec<SpherePoint> = vec![a.clone()];
    for _ in 0..depth {
        let mut fresh: Vec<SpherePoint> = Vec::new();
        for y in &frontier {
            for atom in f.preimages(y)?.atoms() {
                let known = orbit
                    .iter()
                    .chain(fresh.iter())
                    .any(|p| p.chordal_distance(&atom.point) < 1e-7);
                if !known {
                    fresh.push(atom.point.clone());
                }
            }
        }
        if fresh.is_empty() {
            break; // backward orbit closed up
        }
        orbit.extend(fresh.iter().cloned());
        if orbit.len() > bound {
            return Ok(bound + 1);
        }
        frontier = fresh;
    }
    Ok(orbit.len())
}

/// Points with finite backward orbit, searched from periodic points of
/// period ≤ 3 plus the chart-distinguished points. A point qualifies when
/// its backward orbit explored to `depth` levels has at most `bound`
/// elements. The search is necessarily local: it bounds the exceptional set
/// only over the candidate seeds, with no a-priori cardinality bound.
pub fn exceptional_scan(
    f: &dyn Endomorphism,
    depth: usize,
    bound: usize,
) -> Result<Vec<SpherePoint>, PreimageError> {
    let mut found: Vec<SpherePoint> = Vec::new();
    for candidate in f.exceptional_candidates(3) {
        if found.iter().any(|p| p.chordal_distance(&candidate) < 1e-6) {
            continue;
        }
        if backward_orbit_size(f, &candidate, depth, bound)? <= bound {
            found.push(candidate);
        }
    }
    found.sort_by(|a, b| a.lex_cmp(b));
    Ok(found)
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff_distance(a: &[SpherePoint], b: &[SpherePoint]) -> f64 {
    fn directed(from: &[SpherePoint], to: &[SpherePoint]) -> f64 {
        from.par_iter()
            .map(|p| {
                to.iter()
                    .map(|q| p.chordal_distance(q))
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| 0.0, f64::max)
    }
    directed(a, b).max(directed(b, a))
}

/// Hausdorff distance between the support of `mu` and an independently
/// produced Julia reference sample. Atoms with weight below
/// `weight_floor_fraction / len(mu)` are not counted as support.
pub fn support_vs_julia(
    mu: &DiscreteMeasure,
    julia_reference: &[SpherePoint],
    weight_floor_fraction: f64,
) -> f64 {
    let floor = weight_floor_fraction / mu.len() as f64;
    let support: Vec<SpherePoint> = mu
        .atoms()
        .iter()
        .filter(|a| a.weight >= floor)
        .map(|a| a.point.clone())
        .collect();
    hausdorff_distance(&support, julia_reference)
}

/// Mixing correlations along forward iteration.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MixingReport {
    pub phi: String,
    pub psi: String,
    /// Invariance residual of the measure the correlations are taken
    /// against; the statistic is meaningful only for nearly invariant μ.
    pub invariance_residual: f64,
    /// (k, ∫(φ∘f^k)ψ dμ − ∫φ dμ ∫ψ dμ) for k = 0..=k_max.
    pub correlations: Vec<(usize, f64)>,
}

/// Exact-summation correlations `∫ (φ∘f^k) ψ dμ − ∫φ dμ ∫ψ dμ` with `f^k`
/// computed by forward iteration of the atom set.
pub fn mixing_correlation(
    f: &dyn Endomorphism,
    mu: &DiscreteMeasure,
    phi: &dyn Observable,
    psi: &dyn Observable,
    k_max: usize,
    dict: &TestDictionary,
) -> MixingReport {
    let weights: Vec<f64> = mu.atoms().iter().map(|a| a.weight).collect();
    let psi_vals: Vec<f64> = mu.atoms().iter().map(|a| psi.eval(&a.point)).collect();
    let phi_mean = mu.integrate(|p| phi.eval(p));
    let psi_mean: f64 = pairwise_sum(
        &weights
            .iter()
            .zip(psi_vals.iter())
            .map(|(w, v)| w * v)
            .collect::<Vec<_>>(),
    );

    let mut points: Vec<SpherePoint> = mu.atoms().iter().map(|a| a.point.clone()).collect();
    let mut correlations = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let terms: Vec<f64> = points
            .iter()
            .zip(weights.iter().zip(psi_vals.iter()))
            .map(|(p, (w, psv))| w * psv * phi.eval(p))
            .collect();
        let corr = pairwise_sum(&terms) - phi_mean * psi_mean;
        correlations.push((k, corr));
        if k < k_max {
            points = points.par_iter().map(|p| f.evaluate(p)).collect();
        }
    }
    MixingReport {
        phi: phi.id().to_string(),
        psi: psi.id().to_string(),
        invariance_residual: invariance_residual(f, mu, dict),
        correlations,
    }
}

/// Per-iteration weak deviations and the fitted decay exponent.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceReport {
    /// (k, sup-over-dictionary normalized deviation against the final
    /// iterate).
    pub deviations: Vec<(usize, f64)>,
    /// β̂ in deviations ≈ C e^{−β̂ k}, least squares on the log over the fit
    /// window (censored below the float floor). +∞ when the deviations
    /// vanish identically over the window.
    pub fitted_exponent: f64,
    /// Guaranteed exponent ln(d)/n.
    pub bound_exponent: f64,
    pub fit_window: (usize, usize),
    /// The final iterate is dominated by a single atom: the limit is not a
    /// continuous measure and the run is flagged non-convergent.
    pub atomic_limit: bool,
    pub non_convergent: bool,
}

/// Deviations `weak_distance(μ̂_k, μ̂_{k_max})` for `k = 0..k_max` from one
/// pullback run, with a least-squares decay fit on the chosen window.
pub fn convergence_rate(
    f: &dyn Endomorphism,
    a: &SpherePoint,
    dict: &TestDictionary,
    k_max: usize,
    config: &PullbackConfig,
    fit_window: (usize, usize),
) -> Result<ConvergenceReport, PullbackError> {
    let trajectory = pullback_trajectory(f, a, k_max, config)?;
    let snapshots = trajectory.as_slice();
    Ok(convergence_report_from_snapshots(
        f, snapshots, dict, fit_window,
    ))
}

/// Rate report from precomputed iterates `[μ̂_0, ..., μ̂_{k_max}]`.
pub fn convergence_report_from_snapshots(
    f: &dyn Endomorphism,
    snapshots: &[DiscreteMeasure],
    dict: &TestDictionary,
    fit_window: (usize, usize),
) -> ConvergenceReport {
    let k_max = snapshots.len() - 1;
    let last = &snapshots[k_max];
    let last_integrals = dict.integrate_all(last);
    let deviations: Vec<(usize, f64)> = snapshots
        .iter()
        .enumerate()
        .take(k_max)
        .map(|(k, mu)| {
            let integrals = dict.integrate_all(mu);
            let dev = dict
                .functions()
                .iter()
                .zip(integrals.iter().zip(last_integrals.iter()))
                .map(|(f, (x, y))| (x - y).abs() / (1.0 + f.grad_sup()))
                .fold(0.0, f64::max);
            (k, dev)
        })
        .collect();

    let (lo, hi) = fit_window;
    let floor = 1e-14;
    let pts: Vec<(f64, f64)> = deviations
        .iter()
        .filter(|(k, dev)| *k >= lo && *k <= hi && *dev > floor)
        .map(|(k, dev)| (*k as f64, dev.ln()))
        .collect();
    let fitted_exponent = if pts.len() < 2 {
        f64::INFINITY // already below the float floor across the window
    } else {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|(x, _)| x).sum();
        let sy: f64 = pts.iter().map(|(_, y)| y).sum();
        let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
        let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        -slope
    };

    let descriptor = f.descriptor();
    let bound_exponent = (descriptor.degree as f64).ln() / descriptor.dimension as f64;
    let atomic_limit = last.max_weight() > 0.5;
    let non_convergent = atomic_limit || (pts.len() >= 2 && fitted_exponent < 0.02);
    ConvergenceReport {
        deviations,
        fitted_exponent,
        bound_exponent,
        fit_window,
        atomic_limit,
        non_convergent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endo::RationalMap;
    use crate::harmonics::ChebyshevObservable;
    use crate::pullback::{pullback_iterate, PruneStrategy};
    use crate::sphere::{circle_points, sample_uniform, stereo_lift, ChartPoint, SpherePoint};

    fn chart(re: f64, im: f64) -> SpherePoint {
        stereo_lift(ChartPoint::finite(re, im))
    }

    fn dict8() -> TestDictionary {
        TestDictionary::s2(8)
    }

    #[test]
    fn weak_distance_vanishes_on_equal_measures() {
        let dict = dict8();
        let mu = DiscreteMeasure::uniform_on(sample_uniform(2, 100, 5)).unwrap();
        assert_eq!(weak_distance(&mu, &mu, &dict), 0.0);
    }

    #[test]
    fn weak_distance_of_poles_matches_direct_evaluation() {
        let dict = TestDictionary::s2(3);
        let n = DiscreteMeasure::dirac(SpherePoint::north_pole(2));
        let s = DiscreteMeasure::dirac(SpherePoint::south_pole(2));
        let got = weak_distance(&n, &s, &dict);
        // direct evaluation oracle: the harmonic gap per function
        let expected = dict
            .functions()
            .iter()
            .map(|f| {
                (f.eval(&SpherePoint::north_pole(2)) - f.eval(&SpherePoint::south_pole(2))).abs()
                    / (1.0 + f.grad_sup())
            })
            .fold(0.0, f64::max);
        assert!(got > 0.0);
        assert!((got - expected).abs() < 1e-14);
    }

    #[test]
    fn weak_distance_is_a_pseudometric() {
        let dict = TestDictionary::s2(4);
        let measures: Vec<DiscreteMeasure> = (0..6)
            .map(|s| DiscreteMeasure::uniform_on(sample_uniform(2, 40, 100 + s)).unwrap())
            .collect();
        for a in &measures {
            for b in &measures {
                let ab = weak_distance(a, b, &dict);
                let ba = weak_distance(b, a, &dict);
                assert!((ab - ba).abs() < 1e-15);
                for c in &measures {
                    let ac = weak_distance(a, c, &dict);
                    let cb = weak_distance(c, b, &dict);
                    assert!(ab <= ac + cb + 1e-12);
                }
            }
        }
    }

    #[test]
    fn roots_of_unity_match_the_circle_measure_weakly() {
        let dict = dict8();
        let coarse = DiscreteMeasure::uniform_on(circle_points(1024, 0.0)).unwrap();
        let fine = DiscreteMeasure::uniform_on(circle_points(4096, 0.37)).unwrap();
        // both integrate trigonometric polynomials of degree ≤ 8 exactly
        assert!(weak_distance(&coarse, &fine, &dict) < 1e-3);
    }

    #[test]
    fn balance_and_invariance_on_the_circle_measure() {
        let f = RationalMap::z_power(2);
        let dict = dict8();
        let circle = DiscreteMeasure::uniform_on(circle_points(4096, 0.21)).unwrap();
        let bal = balance_residual(&f, &circle, &dict).unwrap();
        let inv = invariance_residual(&f, &circle, &dict);
        assert!(bal < 1e-3, "balance {bal}");
        assert!(inv < 1e-3, "invariance {inv}");
    }

    #[test]
    fn dirac_at_fixed_point_is_invariant_but_not_balanced() {
        let f = RationalMap::z_power(2);
        let dict = dict8();
        let fixed = DiscreteMeasure::dirac(chart(1.0, 0.0));
        assert!(invariance_residual(&f, &fixed, &dict) < 1e-12);
        assert!(balance_residual(&f, &fixed, &dict).unwrap() > 0.1);

        let moved = DiscreteMeasure::dirac(chart(0.5, 0.5));
        assert!(invariance_residual(&f, &moved, &dict) > 0.1);
    }

    #[test]
    fn residuals_decay_along_the_pullback() {
        let f = RationalMap::z_power(2);
        let dict = dict8();
        let config = PullbackConfig {
            max_atoms: 4096,
            prune: PruneStrategy::None,
            seed: 0,
        };
        let traj = pullback_trajectory(&f, &chart(1.17, 0.4), 12, &config).unwrap();
        let bal4 = balance_residual(&f, &traj[4], &dict).unwrap();
        let bal12 = balance_residual(&f, &traj[12], &dict).unwrap();
        let inv4 = invariance_residual(&f, &traj[4], &dict);
        let inv12 = invariance_residual(&f, &traj[12], &dict);
        assert!(bal12 < 1e-2, "balance at k=12: {bal12}");
        assert!(bal12 <= bal4 / 4.0 + 1e-12, "balance: {bal4} -> {bal12}");
        assert!(inv12 <= inv4 / 4.0 + 1e-12, "invariance: {inv4} -> {inv12}");
    }

    #[test]
    fn atom_scan_flags_diracs_and_spread_measures() {
        let radii = [0.1, 0.05, 0.01];
        let dirac = DiscreteMeasure::dirac(chart(0.0, 0.0));
        for (_, mass) in atom_scan(&dirac, &radii) {
            assert_eq!(mass, 1.0);
        }

        let roots = DiscreteMeasure::uniform_on(circle_points(1024, 0.0)).unwrap();
        let scan = atom_scan(&roots, &radii);
        let at_001 = scan.iter().find(|(r, _)| *r == 0.01).unwrap().1;
        // direct count: atoms within a 0.01 ball along the unit circle
        let expected = {
            let pts = circle_points(1024, 0.0);
            let counts = pts
                .iter()
                .map(|c| pts.iter().filter(|p| p.chordal_distance(c) <= 0.01).count())
                .max()
                .unwrap();
            counts as f64 / 1024.0
        };
        assert!((at_001 - expected).abs() < 1e-12);
        assert!(at_001 < 0.005, "max ball mass {at_001}");
    }

    #[test]
    fn stuck_seed_keeps_unit_ball_mass() {
        let f = RationalMap::z_power(3);
        let config = PullbackConfig::default();
        let mu = pullback_iterate(&f, &chart(0.0, 0.0), 8, &config).unwrap();
        let scan = atom_scan(&mu, &[0.1, 0.01]);
        assert!(scan.iter().all(|(_, m)| *m > 0.999));
    }

    #[test]
    fn exceptional_scan_of_power_maps() {
        for d in [2u32, 3] {
            let f = RationalMap::z_power(d);
            let found = exceptional_scan(&f, 8, 10).unwrap();
            assert_eq!(found.len(), 2, "degree {d}: {found:?}");
            let zero = chart(0.0, 0.0);
            let inf = SpherePoint::north_pole(2);
            assert!(found.iter().any(|p| p.chordal_distance(&zero) < 1e-6));
            assert!(found.iter().any(|p| p.chordal_distance(&inf) < 1e-6));
        }
    }

    #[test]
    fn exceptional_scan_of_chebyshev_finds_only_infinity() {
        let f = RationalMap::polynomial(&[-2.0, 0.0, 1.0]).unwrap();
        let found = exceptional_scan(&f, 8, 10).unwrap();
        assert_eq!(found.len(), 1, "{found:?}");
        assert!(found[0].chordal_distance(&SpherePoint::north_pole(2)) < 1e-6);
    }

    #[test]
    fn exceptional_scan_of_a_lattes_map_is_empty() {
        // (z²+1)² / (4z(z²-1)) has empty exceptional set
        let f = RationalMap::new(
            poly_coeffs(&[1.0, 0.0, 2.0, 0.0, 1.0]),
            poly_coeffs(&[0.0, -4.0, 0.0, 4.0]),
        )
        .unwrap();
        let found = exceptional_scan(&f, 6, 12).unwrap();
        assert!(found.is_empty(), "{found:?}");
    }

    fn poly_coeffs(re: &[f64]) -> Vec<num_complex::Complex64> {
        re.iter()
            .map(|&x| num_complex::Complex64::new(x, 0.0))
            .collect()
    }

    #[test]
    fn hausdorff_distance_basics() {
        let a = circle_points(64, 0.0);
        let b = circle_points(128, 0.1);
        let d = hausdorff_distance(&a, &b);
        // both sample the same circle; gaps are at most one spacing
        assert!(d < 2.0 * std::f64::consts::TAU / 64.0);
        let far = vec![SpherePoint::north_pole(2)];
        assert!(hausdorff_distance(&a, &far) > 1.0);
    }

    #[test]
    fn mixing_of_the_circle_measure_under_squaring() {
        let f = RationalMap::z_power(2);
        let dict = TestDictionary::s2(3);
        let mu = DiscreteMeasure::uniform_on(circle_points(4096, 0.123)).unwrap();
        let phi = dict.find("y_1_1").unwrap();
        let report = mixing_correlation(&f, &mu, phi, phi, 20, &dict);
        // k = 0 is the variance of φ
        assert!(report.correlations[0].1 > 0.0);
        for (k, corr) in &report.correlations[1..] {
            assert!(corr.abs() < 1e-10, "correlation at k={k} is {corr:.3e}");
        }
        assert!(report.invariance_residual < 1e-3);
    }

    #[test]
    fn chebyshev_mixing_correlations_die_out() {
        let f = RationalMap::polynomial(&[-2.0, 0.0, 1.0]).unwrap();
        let dict = TestDictionary::s2(3);
        let config = PullbackConfig {
            max_atoms: 1 << 14,
            prune: PruneStrategy::None,
            seed: 0,
        };
        let mu = pullback_iterate(&f, &chart(0.3, 0.2), 14, &config).unwrap();
        let phi = ChebyshevObservable::new(1);
        let psi = ChebyshevObservable::new(2);
        let report = mixing_correlation(&f, &mu, &phi, &psi, 10, &dict);
        let tail = report.correlations.last().unwrap().1.abs();
        assert!(tail < 1e-3, "correlation at k=10 is {tail:.3e}");
    }

    #[test]
    fn mixing_at_k_zero_is_the_variance() {
        let f = RationalMap::z_power(2);
        let dict = TestDictionary::s2(3);
        let mu = DiscreteMeasure::uniform_on(sample_uniform(2, 500, 88)).unwrap();
        let phi = dict.find("y_2_1").unwrap();
        let report = mixing_correlation(&f, &mu, phi, phi, 0, &dict);
        let mean = mu.integrate(|p| phi.eval(p));
        let variance = mu.integrate(|p| phi.eval(p).powi(2)) - mean * mean;
        assert!((report.correlations[0].1 - variance).abs() < 1e-13);
    }

    #[test]
    fn volume_pullback_approaches_the_circle_measure() {
        let f = RationalMap::z_power(2);
        let dict = dict8();
        let config = PullbackConfig {
            max_atoms: 4096,
            prune: PruneStrategy::None,
            seed: 21,
        };
        let mu = crate::pullback::pullback_form(&f, 8, 64, &config).unwrap();
        let circle = DiscreteMeasure::uniform_on(circle_points(4096, 0.371)).unwrap();
        let d = weak_distance(&mu, &circle, &dict);
        assert!(d < 0.05, "weak distance to the circle measure: {d}");
    }

    #[test]
    fn volume_pullback_is_independent_of_the_seed_batch() {
        // two disjoint seed batches agree within twice the spread of two
        // half-batches of the first
        let f = RationalMap::z_power(2);
        let dict = dict8();
        let mk = |seed: u64, samples: usize| {
            let config = PullbackConfig {
                max_atoms: 4096,
                prune: PruneStrategy::None,
                seed,
            };
            crate::pullback::pullback_form(&f, 8, samples, &config).unwrap()
        };
        let full_a = mk(100, 64);
        let full_b = mk(200, 64);
        // spread of half-batches, measured over several draws so one lucky
        // pair does not understate it
        let spread = (0..4)
            .map(|i| {
                let h1 = mk(300 + 2 * i, 32);
                let h2 = mk(301 + 2 * i, 32);
                weak_distance(&h1, &h2, &dict)
            })
            .fold(0.0, f64::max);
        let gap = weak_distance(&full_a, &full_b, &dict);
        assert!(
            gap <= 2.0 * spread,
            "batch gap {gap} exceeds twice the half-batch spread {spread}"
        );
    }

    #[test]
    fn convergence_rate_of_squaring_from_a_radial_seed() {
        let f = RationalMap::z_power(2);
        let dict = dict8();
        let config = PullbackConfig {
            max_atoms: 4096,
            prune: PruneStrategy::None,
            seed: 0,
        };
        let report = convergence_rate(&f, &chart(1.3, 0.0), &dict, 12, &config, (2, 9)).unwrap();
        assert!(!report.non_convergent);
        assert!(!report.atomic_limit);
        // radial contraction halves log-radius per level: exponent ≈ ln 2,
        // well above the guaranteed ln(2)/2
        assert!(
            report.fitted_exponent > 2.0f64.ln() - 0.15,
            "fitted {}",
            report.fitted_exponent
        );
        assert!(report.fitted_exponent >= report.bound_exponent - 0.1);
    }

    #[test]
    fn exceptional_seed_is_flagged_non_convergent() {
        let f = RationalMap::z_power(2);
        let dict = dict8();
        let config = PullbackConfig::default();
        let report = convergence_rate(&f, &chart(0.0, 0.0), &dict, 8, &config, (1, 6)).unwrap();
        assert!(report.atomic_limit);
        assert!(report.non_convergent);
    }
}
