//! Serializable mirrors of the core reports and file emission helpers.

use anyhow::{Context, Result};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

use uqr_core::measure::format_f64;
use uqr_core::potential::{CapacityReport, DeviationSetReport};
use uqr_core::sphere::SpherePoint;
use uqr_core::stats::{ConvergenceReport, MixingReport};
use uqr_core::DiscreteMeasure;

/// Metadata stamped into report files. `timestamp_ms` is the one field
/// excluded from the byte-identical determinism contract.
#[derive(Debug, Serialize)]
pub struct Meta {
    pub schema_version: u32,
    pub timestamp_ms: u128,
}

impl Meta {
    pub fn now() -> Meta {
        Meta {
            schema_version: 1,
            timestamp_ms: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub meta: Meta,
    #[serde(flatten)]
    pub body: T,
}

pub fn write_json_report<T: Serialize>(path: &Path, body: T) -> Result<()> {
    let report = Report {
        meta: Meta::now(),
        body,
    };
    let file =
        std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    Ok(())
}

pub fn coords_of(points: &[SpherePoint]) -> Vec<Vec<f64>> {
    points.iter().map(|p| p.coords().to_vec()).collect()
}

#[derive(Debug, Serialize)]
pub struct CapacityReportOut {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub energy: f64,
    pub capacity: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
}

impl From<&CapacityReport> for CapacityReportOut {
    fn from(r: &CapacityReport) -> Self {
        CapacityReportOut {
            points: coords_of(&r.points),
            weights: r.weights.clone(),
            energy: r.energy,
            capacity: r.capacity,
            iterations: r.iterations,
            kkt_residual: r.kkt_residual,
            converged: r.converged,
        }
    }
}

/// Sequence bodies cannot be flattened next to the meta block; wrap them.
#[derive(Debug, Serialize)]
pub struct DeviationBundle {
    pub reports: Vec<DeviationReportOut>,
}

#[derive(Debug, Serialize)]
pub struct DeviationReportOut {
    pub phi: String,
    pub phi_degree: u32,
    pub epsilon: f64,
    pub k: usize,
    pub grid_size: usize,
    pub flagged_count: usize,
    pub flagged: Vec<Vec<f64>>,
    pub estimated_capacity: f64,
    pub bound: f64,
    pub bound_ratio: f64,
    pub grad_norm_n: f64,
}

impl From<&DeviationSetReport> for DeviationReportOut {
    fn from(r: &DeviationSetReport) -> Self {
        DeviationReportOut {
            phi: r.phi.clone(),
            phi_degree: r.phi_degree,
            epsilon: r.epsilon,
            k: r.k,
            grid_size: r.grid_size,
            flagged_count: r.flagged.len(),
            flagged: coords_of(&r.flagged),
            estimated_capacity: r.estimated_capacity,
            bound: r.bound,
            bound_ratio: r.bound_ratio,
            grad_norm_n: r.grad_norm_n,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VerifyBundle {
    pub map: uqr_core::Descriptor,
    pub k_max: usize,
    pub atom_budget: usize,
    pub seed_warning_stuck: bool,
    pub balance_residual: f64,
    pub invariance_residual: f64,
    pub atom_scan: Vec<(f64, f64)>,
    pub julia_method: String,
    pub julia_samples: usize,
    pub support_hausdorff: f64,
    pub mixing: Option<MixingReport>,
    /// `ok` or `failed-convergence` (pullback stuck on an atomic limit).
    pub status: String,
}

#[derive(Debug, Serialize)]
pub struct PullbackSummary {
    pub atoms: usize,
    pub total_mass: f64,
    pub snapshots_written: Vec<String>,
    pub convergence: ConvergenceReport,
}

#[derive(Debug, Serialize)]
pub struct ExceptionalOut {
    pub found: Vec<Vec<f64>>,
    pub depth: usize,
    pub bound: usize,
    pub note: String,
}

/// Write a measure snapshot next to `prefix` with the chosen format.
pub fn write_measure(
    prefix: &Path,
    label: &str,
    format: &str,
    mu: &DiscreteMeasure,
) -> Result<PathBuf> {
    let path = sibling(prefix, label, format);
    let file = std::fs::File::create(&path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = std::io::BufWriter::new(file);
    match format {
        "csv" => mu.write_csv(&mut w)?,
        _ => mu.write_json(&mut w)?,
    }
    Ok(path)
}

pub fn sibling(prefix: &Path, label: &str, extension: &str) -> PathBuf {
    let stem = prefix.to_string_lossy();
    PathBuf::from(format!("{stem}{label}.{extension}"))
}

/// Two-column CSV of a convergence report: k, deviation.
pub fn write_convergence_csv(path: &Path, report: &ConvergenceReport) -> Result<()> {
    let mut w = std::io::BufWriter::new(
        std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    writeln!(w, "k,deviation")?;
    for (k, dev) in &report.deviations {
        writeln!(w, "{k},{}", format_f64(*dev))?;
    }
    Ok(())
}

/// Flat CSV for deviation experiments (flagged points elided).
pub fn write_deviation_csv(path: &Path, reports: &[DeviationReportOut]) -> Result<()> {
    let mut w = std::io::BufWriter::new(
        std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    writeln!(
        w,
        "phi,phi_degree,epsilon,k,flagged_count,estimated_capacity,bound,bound_ratio"
    )?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.phi,
            r.phi_degree,
            format_f64(r.epsilon),
            r.k,
            r.flagged_count,
            format_f64(r.estimated_capacity),
            format_f64(r.bound),
            format_f64(r.bound_ratio)
        )?;
    }
    Ok(())
}

/// Two-column CSV of mixing correlations.
pub fn write_mixing_csv(path: &Path, report: &MixingReport) -> Result<()> {
    let mut w = std::io::BufWriter::new(
        std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    writeln!(w, "k,correlation")?;
    for (k, corr) in &report.correlations {
        writeln!(w, "{k},{}", format_f64(*corr))?;
    }
    Ok(())
}
