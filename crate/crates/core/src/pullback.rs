//! Iterated normalized pullback of measures.
//!
//! One pullback step replaces each atom (a, w) by its complete preimage set
//! with weights w·i(x,f)/d, so the total mass is preserved and k-fold
//! iteration from a Dirac mass produces the normalized preimage distribution
//! `(f^k)* δ_a / d^k`. Between levels the atom list may be thinned by
//! multinomial weight-resampling, which is unbiased for every fixed test
//! function (truncation would bias toward high-index branches).

use rand::RngExt;
use rayon::prelude::*;

use crate::endo::Endomorphism;
use crate::error::PullbackError;
use crate::measure::{DiscreteMeasure, WeightedAtom};
use crate::rng::{child_seed, stream_rng};
use crate::sphere::{sample_uniform, SpherePoint};
use crate::tolerances::ATOM_MERGE_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneStrategy {
    /// Never prune; atom counts grow like d^k.
    None,
    /// Draw `max_atoms` atoms i.i.d. proportional to weight and assign each
    /// the uniform weight 1/max_atoms.
    WeightResample,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PullbackConfig {
    pub max_atoms: usize,
    pub prune: PruneStrategy,
    pub seed: u64,
}

impl Default for PullbackConfig {
    fn default() -> Self {
        PullbackConfig {
            max_atoms: 4096,
            prune: PruneStrategy::WeightResample,
            seed: 0,
        }
    }
}

/// One normalized pullback step: returns `(1/d) f* μ`.
pub fn pullback_once(
    f: &dyn Endomorphism,
    mu: &DiscreteMeasure,
) -> Result<DiscreteMeasure, PullbackError> {
    pullback_level(f, mu, 0)
}

fn pullback_level(
    f: &dyn Endomorphism,
    mu: &DiscreteMeasure,
    level: usize,
) -> Result<DiscreteMeasure, PullbackError> {
    let d = f.degree() as f64;
    let expanded: Result<Vec<Vec<WeightedAtom>>, PullbackError> = mu
        .atoms()
        .par_iter()
        .enumerate()
        .map(|(atom_index, atom)| {
            let pre = f.preimages(&atom.point).map_err(|source| PullbackError {
                level,
                atom_index,
                atom: atom.point.coords().to_vec(),
                source,
            })?;
            Ok(pre
                .atoms()
                .iter()
                .map(|p| WeightedAtom {
                    point: p.point.clone(),
                    weight: atom.weight * p.index as f64 / d,
                })
                .collect())
        })
        .collect();
    let atoms: Vec<WeightedAtom> = expanded?.into_iter().flatten().collect();
    DiscreteMeasure::normalized(atoms).map_err(|_| PullbackError {
        level,
        atom_index: 0,
        atom: Vec::new(),
        source: crate::error::PreimageError::IndexSumMismatch {
            got: 0,
            expected: f.degree(),
        },
    })
}

/// Pushforward: each atom (x, w) moves to (f(x), w).
pub fn pushforward_measure(f: &dyn Endomorphism, mu: &DiscreteMeasure) -> DiscreteMeasure {
    let atoms: Vec<WeightedAtom> = mu
        .atoms()
        .par_iter()
        .map(|a| WeightedAtom {
            point: f.evaluate(&a.point),
            weight: a.weight,
        })
        .collect();
    DiscreteMeasure::normalized(atoms).expect("pushforward preserves mass")
}

/// `(f^k)* δ_a / d^k` with pruning between levels; deterministic in the
/// config seed.
pub fn pullback_iterate(
    f: &dyn Endomorphism,
    a: &SpherePoint,
    k: usize,
    config: &PullbackConfig,
) -> Result<DiscreteMeasure, PullbackError> {
    Ok(pullback_trajectory(f, a, k, config)?
        .pop()
        .expect("k+1 snapshots"))
}

/// All intermediate iterates `[δ_a, μ̂_1, ..., μ̂_k]` from one run.
pub fn pullback_trajectory(
    f: &dyn Endomorphism,
    a: &SpherePoint,
    k: usize,
    config: &PullbackConfig,
) -> Result<Vec<DiscreteMeasure>, PullbackError> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(DiscreteMeasure::dirac(a.clone()));
    for level in 0..k {
        let next = pullback_level(f, out.last().expect("nonempty"), level)?;
        out.push(prune(next, config, level as u64));
    }
    Ok(out)
}

fn prune(mu: DiscreteMeasure, config: &PullbackConfig, level: u64) -> DiscreteMeasure {
    match config.prune {
        PruneStrategy::None => mu,
        PruneStrategy::WeightResample if mu.len() <= config.max_atoms => mu,
        PruneStrategy::WeightResample => {
            let mut rng = stream_rng(config.seed, level);
            resample(&mu, config.max_atoms, &mut rng)
        }
    }
}

/// Multinomial resampling: `count` i.i.d. draws proportional to weight, each
/// re-weighted 1/count. Unbiased for every fixed integrand.
pub fn resample(mu: &DiscreteMeasure, count: usize, rng: &mut impl rand::Rng) -> DiscreteMeasure {
    let mut cumulative = Vec::with_capacity(mu.len());
    let mut acc = 0.0;
    for a in mu.atoms() {
        acc += a.weight;
        cumulative.push(acc);
    }
    let total = acc;
    let w = 1.0 / count as f64;
    let atoms: Vec<WeightedAtom> = (0..count)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * total;
            let idx = match cumulative.binary_search_by(|c| c.total_cmp(&u)) {
                Ok(i) => (i + 1).min(mu.len() - 1),
                Err(i) => i.min(mu.len() - 1),
            };
            WeightedAtom {
                point: mu.atoms()[idx].point.clone(),
                weight: w,
            }
        })
        .collect();
    DiscreteMeasure::normalized(atoms).expect("resample preserves mass")
}

/// Monte Carlo representation of `(f^k)* ω / d^k` for ω the normalized
/// volume: the average of pullback trees rooted at uniformly drawn seeds.
pub fn pullback_form(
    f: &dyn Endomorphism,
    k: usize,
    sample_count: usize,
    config: &PullbackConfig,
) -> Result<DiscreteMeasure, PullbackError> {
    let seeds = sample_uniform(
        f.dimension(),
        sample_count,
        child_seed(config.seed, 0x5eed_f0c0),
    );
    let trees: Result<Vec<DiscreteMeasure>, PullbackError> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, seed)| {
            let sub = PullbackConfig {
                seed: child_seed(config.seed, 0x7000 + i as u64),
                ..*config
            };
            pullback_iterate(f, seed, k, &sub)
        })
        .collect();
    let scale = 1.0 / sample_count as f64;
    let atoms: Vec<WeightedAtom> = trees?
        .into_iter()
        .flat_map(|mu| {
            mu.atoms()
                .iter()
                .map(|a| WeightedAtom {
                    point: a.point.clone(),
                    weight: a.weight * scale,
                })
                .collect::<Vec<_>>()
        })
        .collect();
    DiscreteMeasure::normalized(atoms).map_err(|_| PullbackError {
        level: k,
        atom_index: 0,
        atom: Vec::new(),
        source: crate::error::PreimageError::IndexSumMismatch {
            got: 0,
            expected: f.degree(),
        },
    })
}

/// A seed is stuck when its whole preimage set is itself: the pullback then
/// never leaves the point and the measure cannot equidistribute. Used as a
/// pre-run warning, not an error; exploring such seeds is legitimate.
pub fn is_stuck_seed(f: &dyn Endomorphism, a: &SpherePoint) -> bool {
    match f.preimages(a) {
        Ok(pre) => pre.len() == 1 && pre.atoms()[0].point.chordal_distance(a) < ATOM_MERGE_TOL,
        Err(_) => false,
    }
}
