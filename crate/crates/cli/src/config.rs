//! Experiment configuration: one structured JSON file per experiment.
//!
//! The schema is versioned through `schema_version` (currently 1). Identical
//! config files produce byte-identical numeric outputs; the only field
//! excluded from that contract is the `meta.timestamp_ms` value stamped into
//! report files. All randomness derives from `rng_seed` by counter-based
//! splitting.
//!
//! Top-level schema:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "rng_seed": 42,
//!   "map": {"family": "rational",
//!           "numerator": [[-2.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
//!           "denominator": [[1.0, 0.0]]},
//!   "pullback": {"seed_point": {"chart": [0.3, 0.2]},
//!                "k_max": 12, "snapshots": [0, 4, 8, 12],
//!                "max_atoms": 4096, "prune": "weight_resample",
//!                "fit_window": [2, 9]},
//!   "dictionary": {"degree": 8},
//!   "verify": { ... }, "capacity": { ... }, "deviation": { ... },
//!   "exceptional": { ... }, "mixing": { ... }
//! }
//! ```
//!
//! Coefficient lists are ascending-in-degree `[re, im]` pairs. A `zorich`
//! map spec is `{"family": "zorich", "stretch": 3}`. Only the sections a
//! subcommand needs must be present.

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use uqr_core::pullback::{PruneStrategy, PullbackConfig};
use uqr_core::sphere::{stereo_lift, ChartPoint, SpherePoint};
use uqr_core::{Endomorphism, RationalMap};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub rng_seed: u64,
    pub map: MapSpec,
    #[serde(default)]
    pub pullback: Option<PullbackSection>,
    #[serde(default)]
    pub dictionary: Option<DictionarySection>,
    #[serde(default)]
    pub verify: Option<VerifySection>,
    #[serde(default)]
    pub capacity: Option<CapacitySection>,
    #[serde(default)]
    pub deviation: Option<DeviationSection>,
    #[serde(default)]
    pub exceptional: Option<ExceptionalSection>,
    #[serde(default)]
    pub mixing: Option<MixingSection>,
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut deserializer = serde_json::Deserializer::from_str(&text);
        let config: ExperimentConfig = serde_path_to_error::deserialize(&mut deserializer)
            .map_err(|e| {
                // tagged enums buffer their content, which hides the inner
                // path; re-validate the map section by hand for a precise
                // field name
                let detail = serde_json::from_str::<serde_json::Value>(&text)
                    .ok()
                    .and_then(|raw| map_section_error(&raw));
                match detail {
                    Some(msg) => anyhow::anyhow!("config field `{msg}` ({})", path.display()),
                    None => anyhow::anyhow!(
                        "config field `{}`: {} ({})",
                        e.path(),
                        e.inner(),
                        path.display()
                    ),
                }
            })?;
        if config.schema_version != 1 {
            bail!(
                "config field `schema_version`: unsupported version {} (expected 1)",
                config.schema_version
            );
        }
        Ok(config)
    }

    pub fn build_map(&self) -> Result<Box<dyn Endomorphism>> {
        self.map.build()
    }

    /// Dictionary degree cap: configured value, else 8 on S² and 4 on S³
    /// (hyperspherical harmonics grow like (l+1)² per degree).
    pub fn dictionary_degree(&self, dim: usize) -> u32 {
        self.dictionary
            .as_ref()
            .map(|d| d.degree)
            .unwrap_or(if dim == 3 { 4 } else { 8 })
    }
}

/// First malformed entry of the `map` section, as a `path: problem` string.
fn map_section_error(raw: &serde_json::Value) -> Option<String> {
    let map = raw.get("map")?;
    let family = map.get("family").and_then(|f| f.as_str());
    match family {
        Some("rational") => {
            for key in ["numerator", "denominator"] {
                let list = match map.get(key) {
                    None => return Some(format!("map.{key}: missing coefficient list")),
                    Some(list) => list,
                };
                let arr = match list.as_array() {
                    None => return Some(format!("map.{key}: expected a list of [re, im] pairs")),
                    Some(arr) => arr,
                };
                for (i, entry) in arr.iter().enumerate() {
                    let ok = entry
                        .as_array()
                        .map(|pair| pair.len() == 2 && pair.iter().all(|v| v.is_number()))
                        .unwrap_or(false);
                    if !ok {
                        return Some(format!(
                            "map.{key}[{i}]: expected an [re, im] pair of numbers, got {entry}"
                        ));
                    }
                }
            }
            None
        }
        Some("zorich") => match map.get("stretch").and_then(|s| s.as_u64()) {
            Some(_) => None,
            None => Some("map.stretch: expected an odd integer >= 3".into()),
        },
        Some(other) => Some(format!("map.family: unknown family {other:?}")),
        None => Some("map.family: missing".into()),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MapSpec {
    Rational {
        numerator: Vec<[f64; 2]>,
        denominator: Vec<[f64; 2]>,
    },
    Zorich {
        stretch: u32,
    },
}

impl MapSpec {
    pub fn build(&self) -> Result<Box<dyn Endomorphism>> {
        match self {
            MapSpec::Rational {
                numerator,
                denominator,
            } => {
                if numerator.is_empty() {
                    bail!("config field `map.numerator`: coefficient list is empty");
                }
                if denominator.is_empty() {
                    bail!("config field `map.denominator`: coefficient list is empty");
                }
                let to_complex = |cs: &[[f64; 2]]| -> Vec<Complex64> {
                    cs.iter().map(|c| Complex64::new(c[0], c[1])).collect()
                };
                let map = RationalMap::new(to_complex(numerator), to_complex(denominator))
                    .context("config field `map`: invalid rational map")?;
                Ok(Box::new(map))
            }
            MapSpec::Zorich { stretch } => {
                let map = uqr_core::ZorichPowerMap::new(*stretch)
                    .context("config field `map.stretch`: invalid power map")?;
                Ok(Box::new(map))
            }
        }
    }

    /// Rational maps expose chart-level extras (escape-time references,
    /// periodic points); rebuild one when possible.
    pub fn build_rational(&self) -> Option<RationalMap> {
        match self {
            MapSpec::Rational {
                numerator,
                denominator,
            } => RationalMap::new(
                numerator
                    .iter()
                    .map(|c| Complex64::new(c[0], c[1]))
                    .collect(),
                denominator
                    .iter()
                    .map(|c| Complex64::new(c[0], c[1]))
                    .collect(),
            )
            .ok(),
            MapSpec::Zorich { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Chart { chart: [f64; 2] },
    Coords { coords: Vec<f64> },
}

impl PointSpec {
    pub fn build(&self, dim: usize) -> Result<SpherePoint> {
        match self {
            PointSpec::Chart { chart } => {
                if dim != 2 {
                    bail!("config field `seed_point.chart`: chart points need a map on S²");
                }
                Ok(stereo_lift(ChartPoint::finite(chart[0], chart[1])))
            }
            PointSpec::Coords { coords } => SpherePoint::new(coords.as_slice())
                .context("config field `seed_point.coords`: not a unit vector"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PullbackSection {
    pub seed_point: PointSpec,
    pub k_max: usize,
    #[serde(default)]
    pub snapshots: Vec<usize>,
    #[serde(default = "default_max_atoms")]
    pub max_atoms: usize,
    #[serde(default = "default_prune")]
    pub prune: PruneStrategy,
    #[serde(default)]
    pub fit_window: Option<[usize; 2]>,
}

fn default_max_atoms() -> usize {
    4096
}

fn default_prune() -> PruneStrategy {
    PruneStrategy::WeightResample
}

impl PullbackSection {
    pub fn pullback_config(&self, rng_seed: u64) -> PullbackConfig {
        PullbackConfig {
            max_atoms: self.max_atoms,
            prune: self.prune,
            seed: rng_seed,
        }
    }

    pub fn fit_window(&self) -> (usize, usize) {
        match self.fit_window {
            Some([lo, hi]) => (lo, hi),
            None => (1, self.k_max.saturating_sub(3).max(2)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DictionarySection {
    pub degree: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifySection {
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default)]
    pub julia: Option<JuliaSection>,
    #[serde(default)]
    pub mixing: Option<MixingPair>,
    /// Atoms with weight below this fraction of the uniform weight are not
    /// counted as support.
    #[serde(default)]
    pub support_weight_floor: f64,
}

fn default_radii() -> Vec<f64> {
    vec![0.1, 0.05, 0.02, 0.01]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JuliaSection {
    #[serde(default = "default_julia_method")]
    pub method: String, // "auto" | "escape" | "backward"
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_de_threshold")]
    pub de_threshold: f64,
    #[serde(default = "default_max_samples")]
    pub max_samples: usize,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

impl Default for JuliaSection {
    fn default() -> Self {
        JuliaSection {
            method: default_julia_method(),
            grid: default_grid(),
            de_threshold: default_de_threshold(),
            max_samples: default_max_samples(),
            depth: default_depth(),
            budget: default_budget(),
        }
    }
}

fn default_julia_method() -> String {
    "auto".into()
}
fn default_grid() -> usize {
    512
}
fn default_de_threshold() -> f64 {
    0.01
}
fn default_max_samples() -> usize {
    20_000
}
fn default_depth() -> usize {
    12
}
fn default_budget() -> usize {
    4096
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixingPair {
    pub phi: String,
    pub psi: String,
    #[serde(default = "default_k_mix")]
    pub k_max: usize,
}

fn default_k_mix() -> usize {
    12
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacitySection {
    pub points: PointCloudSpec,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointCloudSpec {
    Fibonacci {
        count: usize,
    },
    Circle {
        count: usize,
        #[serde(default)]
        phase: f64,
    },
    Explicit {
        coords: Vec<Vec<f64>>,
    },
}

impl PointCloudSpec {
    pub fn build(&self) -> Result<Vec<SpherePoint>> {
        match self {
            PointCloudSpec::Fibonacci { count } => Ok(uqr_core::sphere::fibonacci_lattice(*count)),
            PointCloudSpec::Circle { count, phase } => {
                Ok(uqr_core::sphere::circle_points(*count, *phase))
            }
            PointCloudSpec::Explicit { coords } => coords
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    SpherePoint::new(c.as_slice()).with_context(|| {
                        format!("config field `capacity.points.coords[{i}]`: not a unit vector")
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviationSection {
    pub epsilons: Vec<f64>,
    pub k_values: Vec<usize>,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default = "default_phi_degree")]
    pub max_phi_degree: u32,
    #[serde(default = "default_omega_samples")]
    pub omega_samples: usize,
    #[serde(default = "default_max_atoms")]
    pub max_atoms: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_grid_size() -> usize {
    300
}
fn default_phi_degree() -> u32 {
    4
}
fn default_omega_samples() -> usize {
    64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExceptionalSection {
    #[serde(default = "default_depth_exc")]
    pub depth: usize,
    #[serde(default = "default_bound")]
    pub bound: usize,
}

fn default_depth_exc() -> usize {
    8
}
fn default_bound() -> usize {
    16
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixingSection {
    pub phi: String,
    pub psi: String,
    #[serde(default = "default_k_mix")]
    pub k_max: usize,
    pub measure: MeasureSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    /// Build the measure with the `pullback` section.
    Pullback,
    /// Equal weights on a circle grid (S² chart unit circle).
    Circle {
        count: usize,
        #[serde(default)]
        phase: f64,
    },
    /// Load a previously emitted measure file (JSON or CSV by extension).
    File { path: String },
}
