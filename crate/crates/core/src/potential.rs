//! Riesz 1-potentials, discrete energies, equilibrium weights, capacities,
//! and the deviation-set capacity experiment.
//!
//! The kernel is `1/‖x−y‖^{n-1}` in the chordal metric. Discrete energies
//! exclude the diagonal (an atom's continuum self-energy is infinite;
//! off-diagonal sums approach continuum energies from below). Equilibrium
//! weights of a finite point set are computed by potential equalization with
//! active-set elimination: on the supporting points the off-diagonal
//! potential is constant and equal to the reported energy W₁, points that
//! would need negative weight are dropped, and under-served dropped points
//! are re-admitted. This reproduces the symmetric minimizers (equal weights
//! on two points or on a circle grid) and makes the discrete analogue of the
//! equilibrium-potential identity `max_support U = W₁` exact at convergence.

use rayon::prelude::*;

use crate::endo::Endomorphism;
use crate::error::PullbackError;
use crate::harmonics::{Observable, TestDictionary};
use crate::measure::{pairwise_sum, DiscreteMeasure};
use crate::pullback::{pullback_trajectory, PullbackConfig};
use crate::rng::child_seed;
use crate::sphere::{sample_uniform, SpherePoint};
use crate::tolerances::{EQUILIBRIUM_MAX_ITERS, POTENTIAL_COINCIDENCE_TOL};

/// Riesz 1-potential `U^μ(x) = Σ w_j / ‖x − x_j‖^{n-1}`; +∞ on an atom.
pub fn riesz_potential(mu: &DiscreteMeasure, x: &SpherePoint) -> f64 {
    let exponent = (mu.dim() - 1) as i32;
    let terms: Vec<f64> = mu
        .atoms()
        .iter()
        .map(|a| {
            let d = a.point.chordal_distance(x);
            if d < POTENTIAL_COINCIDENCE_TOL {
                f64::INFINITY
            } else {
                a.weight / d.powi(exponent)
            }
        })
        .collect();
    pairwise_sum(&terms)
}

/// Off-diagonal Riesz energy `Σ_{j≠l} w_j w_l / ‖x_j − x_l‖^{n-1}`.
/// A single atom reports +∞ (points carry no capacity).
pub fn riesz_energy(mu: &DiscreteMeasure) -> f64 {
    if mu.len() < 2 {
        return f64::INFINITY;
    }
    let exponent = (mu.dim() - 1) as i32;
    let atoms = mu.atoms();
    let rows: Vec<f64> = atoms
        .par_iter()
        .enumerate()
        .map(|(j, a)| {
            let terms: Vec<f64> = atoms[j + 1..]
                .iter()
                .map(|b| {
                    let d = a.point.chordal_distance(&b.point);
                    if d == 0.0 {
                        f64::INFINITY
                    } else {
                        a.weight * b.weight / d.powi(exponent)
                    }
                })
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    2.0 * pairwise_sum(&rows)
}

/// Equilibrium weights of a discretized compact set.
#[derive(Debug, Clone)]
pub struct CapacityReport {
    pub points: Vec<SpherePoint>,
    /// Probability weights over `points` (zero on non-supporting points).
    pub weights: Vec<f64>,
    /// W₁: the off-diagonal energy at the reported weights.
    pub energy: f64,
    /// C₁ = 1/W₁ (zero when fewer than two distinct points are given).
    pub capacity: f64,
    pub iterations: usize,
    /// max over support of |U_i − W₁| plus any under-service of dropped
    /// points, normalized by max(1, W₁).
    pub kkt_residual: f64,
    pub converged: bool,
}

impl CapacityReport {
    fn degenerate(points: Vec<SpherePoint>) -> CapacityReport {
        let n = points.len();
        CapacityReport {
            points,
            weights: if n == 0 { Vec::new() } else { vec![1.0; 1] },
            energy: f64::INFINITY,
            capacity: 0.0,
            iterations: 0,
            kkt_residual: 0.0,
            converged: true,
        }
    }

    /// Off-diagonal potential at support point `i` under the reported
    /// weights.
    pub fn support_potential(&self, i: usize) -> f64 {
        let n = self.points[i].dim();
        let exponent = (n - 1) as i32;
        let terms: Vec<f64> = self
            .points
            .iter()
            .zip(self.weights.iter())
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, (p, w))| {
                let d = p.chordal_distance(&self.points[i]);
                if d == 0.0 {
                    f64::INFINITY
                } else {
                    w / d.powi(exponent)
                }
            })
            .collect();
        pairwise_sum(&terms)
    }
}

/// Equilibrium weights by potential equalization over the given points.
pub fn equilibrium_weights(points: &[SpherePoint], tolerance: f64) -> CapacityReport {
    // deduplicate coincident points; capacity is a set quantity
    let mut distinct: Vec<SpherePoint> = Vec::with_capacity(points.len());
    for p in points {
        if !distinct
            .iter()
            .any(|q| q.chordal_distance(p) < POTENTIAL_COINCIDENCE_TOL)
        {
            distinct.push(p.clone());
        }
    }
    if distinct.len() < 2 {
        return CapacityReport::degenerate(distinct);
    }
    let n = distinct.len();
    let exponent = (distinct[0].dim() - 1) as i32;
    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = distinct[i].chordal_distance(&distinct[j]);
            let k = 1.0 / d.powi(exponent);
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }
    let (weights, energy, iterations, kkt_residual, converged) =
        equilibrium_for_kernel(&kernel, n, tolerance);
    CapacityReport {
        points: distinct,
        weights,
        capacity: if energy.is_finite() && energy > 0.0 {
            1.0 / energy
        } else {
            0.0
        },
        energy,
        iterations,
        kkt_residual,
        converged,
    }
}

/// Equalize potentials for an arbitrary symmetric kernel matrix with zero
/// diagonal (row-major, `n x n`). Exposed for synthetic-kernel checks.
///
/// Returns (weights, energy, iterations, kkt residual, converged).
pub fn equilibrium_for_kernel(
    kernel: &[f64],
    n: usize,
    tolerance: f64,
) -> (Vec<f64>, f64, usize, f64, bool) {
    assert_eq!(kernel.len(), n * n);
    let mut active: Vec<bool> = vec![true; n];
    let mut iterations = 0usize;
    let mut readmissions = 0usize;
    let max_readmissions = 12usize;
    let mut best: Option<(f64, Vec<f64>, f64)> = None; // (kkt, weights, energy)

    'outer: loop {
        iterations += 1;
        if iterations > EQUILIBRIUM_MAX_ITERS {
            break;
        }
        let idx: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
        let m = idx.len();
        if m < 2 {
            let mut w = vec![0.0; n];
            if let Some(&i) = idx.first() {
                w[i] = 1.0;
            }
            return (w, f64::INFINITY, iterations, 0.0, false);
        }
        // solve K_SS u = 1; equalized weights are u normalized to mass one
        let mut a = vec![0.0; m * m];
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                a[r * m + c] = kernel[i * n + j];
            }
        }
        let u = match lu_solve_ones(&mut a, m) {
            Some(u) => u,
            None => {
                // singular subsystem: drop the last active point and retry
                active[*idx.last().expect("m >= 2")] = false;
                continue;
            }
        };
        let total: f64 = u.iter().sum();
        if total == 0.0 || !total.is_finite() {
            active[*idx.last().expect("m >= 2")] = false;
            continue;
        }
        let mut weights = vec![0.0; n];
        for (r, &i) in idx.iter().enumerate() {
            weights[i] = u[r] / total;
        }

        // infeasible: retire the most negative weight and re-solve; dropping
        // points one at a time avoids destabilizing the neighbors
        let worst_negative = idx
            .iter()
            .copied()
            .filter(|&i| weights[i] < 0.0)
            .min_by(|&a, &b| weights[a].total_cmp(&weights[b]));
        if let Some(i) = worst_negative {
            active[i] = false;
            let dropped = n - active.iter().filter(|a| **a).count();
            if dropped > n / 2 {
                break; // ragged support; report the best iterate seen
            }
            continue;
        }

        // equalized value, spread over the support, and complementarity on
        // the retired points
        let potential = |i: usize| -> f64 {
            let terms: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| weights[j] * kernel[i * n + j])
                .collect();
            pairwise_sum(&terms)
        };
        let active_potentials: Vec<f64> = idx.iter().map(|&i| potential(i)).collect();
        let w1 = pairwise_sum(
            &idx.iter()
                .zip(active_potentials.iter())
                .map(|(&i, u)| weights[i] * u)
                .collect::<Vec<_>>(),
        );
        let spread = active_potentials
            .iter()
            .map(|u| (u - w1).abs())
            .fold(0.0, f64::max);
        let scale = w1.abs().max(1.0);

        let underserved: Vec<usize> = (0..n)
            .filter(|&i| !active[i] && w1 - potential(i) > tolerance * scale)
            .collect();
        let under_gap = underserved
            .iter()
            .map(|&i| w1 - potential(i))
            .fold(0.0, f64::max);
        let kkt = (spread + under_gap) / scale;
        if best.as_ref().map(|(b, _, _)| kkt < *b).unwrap_or(true) {
            best = Some((kkt, weights.clone(), w1));
        }
        if kkt <= tolerance {
            return (weights, w1, iterations, kkt, true);
        }
        if !underserved.is_empty() && readmissions < max_readmissions {
            readmissions += 1;
            for i in underserved {
                active[i] = true;
            }
            continue 'outer;
        }
        break;
    }

    match best {
        Some((kkt, weights, w1)) => (weights, w1, iterations, kkt, kkt <= tolerance),
        None => (vec![0.0; n], f64::NAN, iterations, f64::INFINITY, false),
    }
}

/// Partial-pivot LU solve of `A u = 1` for a small dense system (in place).
fn lu_solve_ones(a: &mut [f64], m: usize) -> Option<Vec<f64>> {
    let mut rhs = vec![1.0; m];
    let mut perm: Vec<usize> = (0..m).collect();
    for col in 0..m {
        let (pivot_row, pivot_val) = (col..m)
            .map(|r| (r, a[perm[r] * m + col].abs()))
            .fold((col, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pivot_val < 1e-300 {
            return None;
        }
        perm.swap(col, pivot_row);
        let prow = perm[col];
        for &row in &perm[(col + 1)..m] {
            let factor = a[row * m + col] / a[prow * m + col];
            a[row * m + col] = 0.0;
            for c in (col + 1)..m {
                a[row * m + c] -= factor * a[prow * m + c];
            }
            rhs[row] -= factor * rhs[prow];
        }
    }
    let mut u = vec![0.0; m];
    for col in (0..m).rev() {
        let row = perm[col];
        let mut acc = rhs[row];
        for c in (col + 1)..m {
            acc -= a[row * m + c] * u[c];
        }
        u[col] = acc / a[row * m + col];
        if !u[col].is_finite() {
            return None;
        }
    }
    Some(u)
}

/// One deviation-set measurement: the grid points whose normalized pullback
/// against the volume-form pullback deviates by at least ε on φ, with the
/// capacity of the flagged set and the a-priori capacity bound
/// `K^{1/n} ‖∇φ‖_n / (ε d^{k/n})`.
#[derive(Debug, Clone)]
pub struct DeviationSetReport {
    pub phi: String,
    pub phi_degree: u32,
    pub epsilon: f64,
    pub k: usize,
    pub grid_size: usize,
    pub flagged: Vec<SpherePoint>,
    pub estimated_capacity: f64,
    pub bound: f64,
    /// estimated_capacity / bound; at most 1 when the bound holds.
    pub bound_ratio: f64,
    pub grad_norm_n: f64,
}

/// Run the deviation-set experiment for every dictionary function of degree
/// ≤ `max_phi_degree`, every ε, and every k in `k_values`.
///
/// Pullback trees are computed once per grid point up to max(k), and the
/// volume term once per k from `omega_samples` uniform seeds.
#[allow(clippy::too_many_arguments)]
pub fn deviation_set_experiment(
    f: &dyn Endomorphism,
    dict: &TestDictionary,
    max_phi_degree: u32,
    epsilons: &[f64],
    k_values: &[usize],
    grid: &[SpherePoint],
    omega_samples: usize,
    config: &PullbackConfig,
    solver_tolerance: f64,
) -> Result<Vec<DeviationSetReport>, PullbackError> {
    let k_max = k_values.iter().copied().max().unwrap_or(0);
    let nfns = dict.len();

    // integrals [k][fn] for a trajectory from one seed
    let integrals_for =
        |seed: &SpherePoint, cfg: &PullbackConfig| -> Result<Vec<Vec<f64>>, PullbackError> {
            let traj = pullback_trajectory(f, seed, k_max, cfg)?;
            Ok(traj.iter().map(|mu| dict.integrate_all(mu)).collect())
        };

    let grid_integrals: Result<Vec<Vec<Vec<f64>>>, PullbackError> = grid
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let cfg = PullbackConfig {
                seed: child_seed(config.seed, 0x9100 + i as u64),
                ..*config
            };
            integrals_for(a, &cfg)
        })
        .collect();
    let grid_integrals = grid_integrals?;

    let omega_seeds = sample_uniform(f.dimension(), omega_samples, child_seed(config.seed, 0xa11));
    let omega_parts: Result<Vec<Vec<Vec<f64>>>, PullbackError> = omega_seeds
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let cfg = PullbackConfig {
                seed: child_seed(config.seed, 0xb700 + i as u64),
                ..*config
            };
            integrals_for(a, &cfg)
        })
        .collect();
    let omega_parts = omega_parts?;
    // average the volume trees: omega_term[k][fn]
    let mut omega_term = vec![vec![0.0; nfns]; k_max + 1];
    for part in &omega_parts {
        for (k, row) in part.iter().enumerate() {
            for (t, v) in omega_term[k].iter_mut().zip(row.iter()) {
                *t += v / omega_samples as f64;
            }
        }
    }

    let descriptor = f.descriptor();
    let nd = descriptor.dimension as f64;
    let deg = descriptor.degree as f64;
    let mut reports = Vec::new();
    for (fi, func) in dict.functions().iter().enumerate() {
        if func.degree() > max_phi_degree {
            continue;
        }
        for &eps in epsilons {
            for &k in k_values {
                let flagged: Vec<SpherePoint> = grid
                    .iter()
                    .enumerate()
                    .filter(|(gi, _)| (grid_integrals[*gi][k][fi] - omega_term[k][fi]).abs() >= eps)
                    .map(|(_, p)| p.clone())
                    .collect();
                let capacity = if flagged.len() < 2 {
                    0.0
                } else {
                    equilibrium_weights(&flagged, solver_tolerance).capacity
                };
                let bound = descriptor.distortion.powf(1.0 / nd) * func.grad_norm_n()
                    / (eps * deg.powf(k as f64 / nd));
                reports.push(DeviationSetReport {
                    phi: func.id().to_string(),
                    phi_degree: func.degree(),
                    epsilon: eps,
                    k,
                    grid_size: grid.len(),
                    flagged,
                    estimated_capacity: capacity,
                    bound,
                    bound_ratio: capacity / bound,
                    grad_norm_n: func.grad_norm_n(),
                });
            }
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::WeightedAtom;
    use crate::sphere::{circle_points, fibonacci_lattice, stereo_lift, ChartPoint};

    fn chart(re: f64, im: f64) -> SpherePoint {
        stereo_lift(ChartPoint::finite(re, im))
    }

    #[test]
    fn potential_of_a_dirac() {
        let p = SpherePoint::north_pole(2);
        let mu = DiscreteMeasure::dirac(p.clone());
        // antipodal chord has length 2 and the S² kernel exponent is 1
        assert!((riesz_potential(&mu, &SpherePoint::south_pole(2)) - 0.5).abs() < 1e-15);
        assert!(riesz_potential(&mu, &p).is_infinite());
    }

    #[test]
    fn potential_of_the_circle_measure_at_the_south_pole() {
        // atoms on the equator are all at chordal distance sqrt(2) from the
        // pole; quadrature of the closed-form integrand gives 1/sqrt(2)
        let mu = DiscreteMeasure::uniform_on(circle_points(1024, 0.0)).unwrap();
        let got = riesz_potential(&mu, &chart(0.0, 0.0));
        let quad: f64 = (0..100_000)
            .map(|i| {
                let theta = std::f64::consts::TAU * (i as f64 + 0.5) / 100_000.0;
                let equator =
                    SpherePoint::normalized([theta.cos(), theta.sin(), 0.0].as_slice()).unwrap();
                1.0 / (100_000.0 * equator.chordal_distance(&SpherePoint::south_pole(2)))
            })
            .sum();
        assert!((got - quad).abs() / quad < 0.01, "{got} vs {quad}");
        assert!((got - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
    }

    #[test]
    fn energy_conventions() {
        let single = DiscreteMeasure::dirac(SpherePoint::north_pole(2));
        assert!(riesz_energy(&single).is_infinite());

        let pair = DiscreteMeasure::new(vec![
            WeightedAtom {
                point: SpherePoint::north_pole(2),
                weight: 0.5,
            },
            WeightedAtom {
                point: SpherePoint::south_pole(2),
                weight: 0.5,
            },
        ])
        .unwrap();
        // 2 * (1/4) / 2 = 1/4
        assert!((riesz_energy(&pair) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn circle_grid_energy_grows_like_the_log_divergent_limit() {
        // uniform measure on a circle has infinite Riesz-1 energy; the
        // discrete energies must increase in N with increments approaching
        // (ln 2)/π, the closed-form growth of (1/N) Σ_m 1/(2 sin(π m / N))
        let mut last = 0.0;
        let mut increments = Vec::new();
        for n in [64usize, 128, 256, 512, 1024] {
            let mu = DiscreteMeasure::uniform_on(circle_points(n, 0.0)).unwrap();
            let e = riesz_energy(&mu);
            // independent closed form via the chord-length formula
            let closed: f64 = (1..n)
                .map(|m| 1.0 / (2.0 * (std::f64::consts::PI * m as f64 / n as f64).sin()))
                .sum::<f64>()
                / n as f64;
            assert!((e - closed).abs() < 1e-9, "n={n}: {e} vs {closed}");
            assert!(e > last, "energy must increase with refinement");
            if last > 0.0 {
                increments.push(e - last);
            }
            last = e;
        }
        let expected = 2.0f64.ln() / std::f64::consts::PI;
        for inc in &increments[1..] {
            assert!(
                (inc - expected).abs() < 0.01,
                "increment {inc} vs {expected}"
            );
        }
    }

    #[test]
    fn two_point_equilibrium_is_symmetric() {
        let report = equilibrium_weights(
            &[SpherePoint::north_pole(2), SpherePoint::south_pole(2)],
            1e-10,
        );
        assert!(report.converged);
        assert!(report.kkt_residual < 1e-10);
        assert!((report.weights[0] - 0.5).abs() < 1e-12);
        assert!((report.weights[1] - 0.5).abs() < 1e-12);
        assert!((report.energy - 0.25).abs() < 1e-12);
        assert!((report.capacity - 4.0).abs() < 1e-10);
    }

    #[test]
    fn circle_equilibrium_is_uniform() {
        let report = equilibrium_weights(&circle_points(256, 0.05), 1e-10);
        assert!(report.converged);
        let max = report.weights.iter().cloned().fold(0.0, f64::max);
        let min = report.weights.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min < 1.05, "max/min = {}", max / min);
        // oracle at N=16: rotational symmetry forces exactly uniform weights
        let small = equilibrium_weights(&circle_points(16, 0.0), 1e-12);
        for w in &small.weights {
            assert!((w - 1.0 / 16.0).abs() < 1e-9, "weight {w}");
        }
    }

    #[test]
    fn clustered_pair_loses_mass_to_the_far_point() {
        // two points 0.01 apart and one essentially antipodal
        let a = chart(0.0, 0.0);
        let b = SpherePoint::normalized([0.01, 0.0, -0.99995].as_slice()).unwrap();
        let far = SpherePoint::north_pole(2);
        let report = equilibrium_weights(&[a, b, far], 1e-10);
        assert!(report.converged);
        let far_w = report.weights[2];
        assert!(
            far_w >= report.weights[0] && far_w >= report.weights[1],
            "weights {:?}",
            report.weights
        );
        // independent KKT verification: equalized potentials on the support,
        // no under-served dropped point
        let w1 = report.energy;
        for (i, &w) in report.weights.iter().enumerate() {
            let u = report.support_potential(i);
            if w > 0.0 {
                assert!(
                    (u - w1).abs() < 1e-8 * w1.max(1.0),
                    "support potential {u} vs {w1}"
                );
            } else {
                assert!(
                    u >= w1 * (1.0 - 1e-8),
                    "dropped point under-served: {u} < {w1}"
                );
            }
        }
    }

    #[test]
    fn max_support_potential_equals_the_energy() {
        // the discrete equilibrium-potential identity, exact at convergence
        for pts in [circle_points(64, 0.3), fibonacci_lattice(100)] {
            let report = equilibrium_weights(&pts, 1e-10);
            assert!(report.converged);
            let max_u = (0..report.points.len())
                .filter(|&i| report.weights[i] > 0.0)
                .map(|i| report.support_potential(i))
                .fold(0.0, f64::max);
            assert!(
                max_u <= report.energy * (1.0 + 1e-6),
                "max potential {max_u} vs W₁ {}",
                report.energy
            );
            // the reported energy is the off-diagonal double sum at the
            // reported weights
            let n = report.points.len();
            let mut double_sum = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        double_sum += report.weights[i] * report.weights[j]
                            / report.points[i].chordal_distance(&report.points[j]);
                    }
                }
            }
            assert!(
                (double_sum - report.energy).abs() <= 1e-9 * report.energy,
                "double sum {double_sum} vs reported energy {}",
                report.energy
            );
        }
    }

    #[test]
    fn whole_sphere_capacity_is_one() {
        // continuum: U ≡ 1 for the uniform measure on S², so W₁ = C₁ = 1;
        // a fine quasi-uniform grid must land nearby
        let report = equilibrium_weights(&fibonacci_lattice(600), 1e-9);
        assert!(report.converged);
        assert!(
            (report.capacity - 1.0).abs() < 0.05,
            "capacity {}",
            report.capacity
        );
    }

    #[test]
    fn first_order_optimality_of_the_equalized_weights() {
        // moving mass along any feasible direction changes the energy only
        // at second order: |E(w + h d) - E(w)| = O(h²) with the first-order
        // term equalized away
        let report = equilibrium_weights(&fibonacci_lattice(60), 1e-10);
        assert!(report.converged);
        let pts = &report.points;
        let n = pts.len();
        let kernel: Vec<f64> = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                if i == j {
                    0.0
                } else {
                    1.0 / pts[i].chordal_distance(&pts[j])
                }
            })
            .collect();
        let energy = |w: &[f64]| -> f64 {
            let mut e = 0.0;
            for i in 0..n {
                for j in 0..n {
                    e += w[i] * w[j] * kernel[i * n + j];
                }
            }
            e
        };
        let e0 = energy(&report.weights);
        let h = 1e-4;
        let kernel_scale = kernel.iter().cloned().fold(0.0, f64::max);
        let mut rng = crate::rng::seeded_rng(2024);
        use rand::RngExt;
        for _ in 0..100 {
            // random feasible direction: move mass between two support points
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i == j || report.weights[i] < h {
                continue;
            }
            let mut w = report.weights.clone();
            w[i] -= h;
            w[j] += h;
            let drop = e0 - energy(&w);
            assert!(
                drop <= 1e-8 * e0.max(1.0) + 2.0 * h * h * kernel_scale,
                "perturbation decreased energy by {drop}"
            );
        }
    }

    #[test]
    fn kernel_scaling_halves_the_energy() {
        // doubling all pairwise distances halves the n=2 kernel, so the
        // equalized energy halves exactly; synthetic-matrix check
        let n = 12;
        let pts = fibonacci_lattice(n);
        let kernel: Vec<f64> = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                if i == j {
                    0.0
                } else {
                    1.0 / pts[i].chordal_distance(&pts[j])
                }
            })
            .collect();
        let halved: Vec<f64> = kernel.iter().map(|k| k / 2.0).collect();
        let (w1, e1, _, _, c1) = equilibrium_for_kernel(&kernel, n, 1e-12);
        let (w2, e2, _, _, c2) = equilibrium_for_kernel(&halved, n, 1e-12);
        assert!(c1 && c2);
        assert!((e2 - e1 / 2.0).abs() < 1e-12 * e1);
        for (a, b) in w1.iter().zip(w2.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn deviation_experiment_edge_cases() {
        use crate::endo::RationalMap;
        use crate::harmonics::TestDictionary;
        use crate::pullback::{PruneStrategy, PullbackConfig};

        let f = RationalMap::z_power(2);
        let dict = TestDictionary::s2(2);
        let grid = fibonacci_lattice(100);
        let config = PullbackConfig {
            max_atoms: 1024,
            prune: PruneStrategy::WeightResample,
            seed: 4,
        };
        // at k=0 the deviation is |φ(a) - ∫φ dω|: a small ε flags most of
        // the grid and the capacity is close to the whole grid's
        let reports =
            deviation_set_experiment(&f, &dict, 1, &[1e-4], &[0], &grid, 64, &config, 1e-9)
                .unwrap();
        let grid_capacity = equilibrium_weights(&grid, 1e-9).capacity;
        for r in &reports {
            assert!(
                r.flagged.len() as f64 >= 0.9 * grid.len() as f64,
                "phi {}: only {} of {} flagged",
                r.phi,
                r.flagged.len(),
                grid.len()
            );
            assert!((r.estimated_capacity - grid_capacity).abs() < 0.1 * grid_capacity);
        }
        // at large k every deviation sits below a generous ε: empty set,
        // zero capacity
        let reports =
            deviation_set_experiment(&f, &dict, 1, &[0.5], &[8], &grid, 64, &config, 1e-9).unwrap();
        for r in &reports {
            assert!(r.flagged.is_empty(), "phi {}: {:?}", r.phi, r.flagged.len());
            assert_eq!(r.estimated_capacity, 0.0);
            assert!(r.bound_ratio <= 1.0);
        }
    }

    #[test]
    fn degenerate_sets_have_zero_capacity() {
        let single = equilibrium_weights(&[SpherePoint::north_pole(2)], 1e-10);
        assert_eq!(single.capacity, 0.0);
        assert!(single.energy.is_infinite());
        // coincident points collapse to one
        let collapsed = equilibrium_weights(
            &[SpherePoint::north_pole(2), SpherePoint::north_pole(2)],
            1e-10,
        );
        assert_eq!(collapsed.capacity, 0.0);
    }
}
