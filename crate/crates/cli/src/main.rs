//! `uqr`: reproducible experiments with equilibrium measures of quasiregular
//! sphere endomorphisms.
//!
//! Every pipeline is a subcommand driven by one JSON config file (schema in
//! [`config`]); outputs are machine-readable JSON or CSV. Identical configs
//! produce byte-identical numeric output, the `meta.timestamp_ms` field
//! aside. Verification failures (a measure that fails to converge, a bound
//! that is exceeded) are reported as data; the process exits nonzero only
//! when a stage itself errors.

mod config;
mod output;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

use config::{ExperimentConfig, JuliaSection, MeasureSpec};
use output::{
    write_convergence_csv, write_deviation_csv, write_json_report, write_measure, write_mixing_csv,
    CapacityReportOut, DeviationReportOut, ExceptionalOut, PullbackSummary, VerifyBundle,
};
use uqr_core::harmonics::{ChebyshevObservable, Observable, TestDictionary};
use uqr_core::julia::{backward_orbit_julia, escape_time_julia};
use uqr_core::pullback::{pullback_trajectory, PullbackConfig};
use uqr_core::sphere::circle_points;
use uqr_core::stats::{
    atom_scan, balance_residual, convergence_report_from_snapshots, exceptional_scan,
    invariance_residual, mixing_correlation, support_vs_julia,
};
use uqr_core::{DiscreteMeasure, Endomorphism};

#[derive(Parser)]
#[command(
    name = "uqr",
    version,
    about = "equilibrium measures of quasiregular sphere maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config file (JSON, schema_version 1).
    #[arg(long, global = true, default_value = "experiment.json")]
    config: PathBuf,
    /// Output path prefix.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Output format for measures and tables.
    #[arg(long, global = true, default_value = "json", value_parser = ["json", "csv"])]
    format: String,
    /// Override the config's rng_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rayon thread count (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Iterated normalized pullback of a point mass: measure snapshots plus
    /// a convergence-rate report.
    Pullback,
    /// The verification bundle: balance, invariance, atom scan, support vs
    /// Julia reference, mixing.
    Verify,
    /// Equilibrium weights, energy W₁, and capacity C₁ of a point cloud.
    Capacity,
    /// Deviation-set experiment: flagged grid points, their capacity, and
    /// the a-priori capacity bound for each (φ, ε, k).
    Deviation,
    /// Search for points with finite backward orbit.
    Exceptional,
    /// Mixing correlations for a pair of observables.
    Mixing,
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    if let Err(err) = run(&cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut config = ExperimentConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.rng_seed = seed;
    }
    match cli.command {
        Command::Pullback => run_pullback(cli, &config),
        Command::Verify => run_verify(cli, &config),
        Command::Capacity => run_capacity(cli, &config),
        Command::Deviation => run_deviation(cli, &config),
        Command::Exceptional => run_exceptional(cli, &config),
        Command::Mixing => run_mixing(cli, &config),
    }
}

fn dictionary_for(map: &dyn Endomorphism, config: &ExperimentConfig) -> TestDictionary {
    let dim = map.dimension();
    TestDictionary::for_dimension(dim, config.dictionary_degree(dim))
}

fn run_pullback(cli: &Cli, config: &ExperimentConfig) -> Result<()> {
    let section = config
        .pullback
        .as_ref()
        .context("config field `pullback`: section required")?;
    let map = config.build_map()?;
    let dict = dictionary_for(map.as_ref(), config);
    let seed_point = section.seed_point.build(map.dimension())?;
    if uqr_core::pullback::is_stuck_seed(map.as_ref(), &seed_point) {
        eprintln!(
            "warning: seed point has a singleton preimage set; the pullback \
             cannot equidistribute from it"
        );
    }
    let pc = section.pullback_config(config.rng_seed);
    let trajectory = pullback_trajectory(map.as_ref(), &seed_point, section.k_max, &pc)?;

    let mut written = Vec::new();
    for &k in &section.snapshots {
        if k >= trajectory.len() {
            bail!("config field `pullback.snapshots`: snapshot {k} exceeds k_max");
        }
        let path = write_measure(&cli.out, &format!("_k{k}"), &cli.format, &trajectory[k])?;
        // record only the file name: the report must not depend on where
        // the caller pointed --out
        written.push(
            path.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        );
    }
    let report =
        convergence_report_from_snapshots(map.as_ref(), &trajectory, &dict, section.fit_window());
    if cli.format == "csv" {
        write_convergence_csv(&output::sibling(&cli.out, "_convergence", "csv"), &report)?;
    }
    let last = trajectory.last().expect("k_max + 1 snapshots");
    let summary = PullbackSummary {
        atoms: last.len(),
        total_mass: last.total_mass(),
        snapshots_written: written,
        convergence: report,
    };
    write_json_report(&output::sibling(&cli.out, "_convergence", "json"), &summary)?;
    println!(
        "pullback: {} atoms at k={}, fitted exponent {:.4} (bound {:.4}){}",
        summary.atoms,
        section.k_max,
        summary.convergence.fitted_exponent,
        summary.convergence.bound_exponent,
        if summary.convergence.non_convergent {
            " [non-convergent]"
        } else {
            ""
        }
    );
    Ok(())
}

fn build_measure(
    config: &ExperimentConfig,
    map: &dyn Endomorphism,
    spec: &MeasureSpec,
) -> Result<DiscreteMeasure> {
    match spec {
        MeasureSpec::Pullback => {
            let section = config
                .pullback
                .as_ref()
                .context("config field `pullback`: section required for measure kind `pullback`")?;
            let seed_point = section.seed_point.build(map.dimension())?;
            let pc = section.pullback_config(config.rng_seed);
            Ok(uqr_core::pullback::pullback_iterate(
                map,
                &seed_point,
                section.k_max,
                &pc,
            )?)
        }
        MeasureSpec::Circle { count, phase } => {
            Ok(DiscreteMeasure::uniform_on(circle_points(*count, *phase))?)
        }
        MeasureSpec::File { path } => {
            let file = std::fs::File::open(path)
                .with_context(|| format!("cannot open measure file {path}"))?;
            let mu = if path.ends_with(".csv") {
                DiscreteMeasure::read_csv(file)
            } else {
                DiscreteMeasure::read_json(file)
            };
            mu.with_context(|| format!("measure file {path} fails validation"))
        }
    }
}

fn julia_reference(
    config: &ExperimentConfig,
    section: &JuliaSection,
) -> Result<(String, Vec<uqr_core::SpherePoint>)> {
    let rational = config
        .map
        .build_rational()
        .context("Julia references are available for rational maps on S²")?;
    let use_escape = match section.method.as_str() {
        "escape" => true,
        "backward" => false,
        "auto" => rational.is_polynomial(),
        other => bail!("config field `verify.julia.method`: unknown method {other:?}"),
    };
    if use_escape {
        if !rational.is_polynomial() {
            bail!("config field `verify.julia.method`: escape-time needs a polynomial map");
        }
        Ok((
            "escape-time".into(),
            escape_time_julia(
                &rational,
                section.grid,
                section.de_threshold,
                section.max_samples,
            ),
        ))
    } else {
        Ok((
            "backward-orbit".into(),
            backward_orbit_julia(&rational, section.depth, section.budget)?,
        ))
    }
}

fn run_verify(cli: &Cli, config: &ExperimentConfig) -> Result<()> {
    let section = config.verify.clone().unwrap_or(config::VerifySection {
        radii: vec![0.1, 0.05, 0.02, 0.01],
        julia: None,
        mixing: None,
        support_weight_floor: 0.0,
    });
    let pull = config
        .pullback
        .as_ref()
        .context("config field `pullback`: section required by verify")?;
    let map = config.build_map()?;
    let dict = dictionary_for(map.as_ref(), config);
    let seed_point = pull.seed_point.build(map.dimension())?;
    let stuck = uqr_core::pullback::is_stuck_seed(map.as_ref(), &seed_point);
    let pc = pull.pullback_config(config.rng_seed);
    let mu = uqr_core::pullback::pullback_iterate(map.as_ref(), &seed_point, pull.k_max, &pc)?;

    let balance = balance_residual(map.as_ref(), &mu, &dict)?;
    let invariance = invariance_residual(map.as_ref(), &mu, &dict);
    let scan = atom_scan(&mu, &section.radii);

    let (julia_method, julia_samples, hausdorff) = if map.dimension() == 2 {
        let jsec = section.julia.clone().unwrap_or_default();
        let (method, reference) = julia_reference(config, &jsec)?;
        let d = support_vs_julia(&mu, &reference, section.support_weight_floor);
        (method, reference.len(), d)
    } else {
        ("none".into(), 0, f64::NAN)
    };

    let mixing = match &section.mixing {
        Some(pair) => {
            let phi = resolve_observable(&dict, &pair.phi)?;
            let psi = resolve_observable(&dict, &pair.psi)?;
            Some(mixing_correlation(
                map.as_ref(),
                &mu,
                phi.as_ref(),
                psi.as_ref(),
                pair.k_max,
                &dict,
            ))
        }
        None => None,
    };

    let smallest_radius_mass = scan.last().map(|(_, m)| *m).unwrap_or(1.0);
    let atomic = mu.max_weight() > 0.5 || smallest_radius_mass > 0.5;
    let bundle = VerifyBundle {
        map: map.descriptor(),
        k_max: pull.k_max,
        atom_budget: pull.max_atoms,
        seed_warning_stuck: stuck,
        balance_residual: balance,
        invariance_residual: invariance,
        atom_scan: scan,
        julia_method,
        julia_samples,
        support_hausdorff: hausdorff,
        mixing,
        status: if atomic {
            "failed-convergence".into()
        } else {
            "ok".into()
        },
    };
    write_json_report(&output::sibling(&cli.out, "_verify", "json"), &bundle)?;
    println!(
        "verify: status={} balance={:.3e} invariance={:.3e} hausdorff={:.4}",
        bundle.status,
        bundle.balance_residual,
        bundle.invariance_residual,
        bundle.support_hausdorff
    );
    Ok(())
}

fn resolve_observable(dict: &TestDictionary, id: &str) -> Result<Box<dyn Observable>> {
    if let Some(order) = id.strip_prefix("cheb_") {
        let m: u32 = order
            .parse()
            .with_context(|| format!("bad Chebyshev observable id {id:?}"))?;
        return Ok(Box::new(ChebyshevObservable::new(m)));
    }
    match dict.find(id) {
        Some(f) => Ok(Box::new(f.clone())),
        None => bail!("observable {id:?} is not in the dictionary (degree cap too low?)"),
    }
}

fn run_capacity(cli: &Cli, config: &ExperimentConfig) -> Result<()> {
    let section = config
        .capacity
        .as_ref()
        .context("config field `capacity`: section required")?;
    let points = section.points.build()?;
    let report = uqr_core::potential::equilibrium_weights(&points, section.tolerance);
    let out = CapacityReportOut::from(&report);
    write_json_report(&output::sibling(&cli.out, "_capacity", "json"), &out)?;
    println!(
        "capacity: C1={:.6} W1={:.6} kkt={:.2e} converged={}",
        out.capacity, out.energy, out.kkt_residual, out.converged
    );
    Ok(())
}

fn run_deviation(cli: &Cli, config: &ExperimentConfig) -> Result<()> {
    let section = config
        .deviation
        .as_ref()
        .context("config field `deviation`: section required")?;
    let map = config.build_map()?;
    let dict = dictionary_for(map.as_ref(), config);
    let grid = uqr_core::sphere::fibonacci_lattice(section.grid_size);
    let pc = PullbackConfig {
        max_atoms: section.max_atoms,
        prune: uqr_core::pullback::PruneStrategy::WeightResample,
        seed: config.rng_seed,
    };
    let reports = uqr_core::potential::deviation_set_experiment(
        map.as_ref(),
        &dict,
        section.max_phi_degree,
        &section.epsilons,
        &section.k_values,
        &grid,
        section.omega_samples,
        &pc,
        section.tolerance,
    )?;
    let out: Vec<DeviationReportOut> = reports.iter().map(DeviationReportOut::from).collect();
    if cli.format == "csv" {
        write_deviation_csv(&output::sibling(&cli.out, "_deviation", "csv"), &out)?;
    }
    let worst = out.iter().map(|r| r.bound_ratio).fold(0.0, f64::max);
    let count = out.len();
    write_json_report(
        &output::sibling(&cli.out, "_deviation", "json"),
        output::DeviationBundle { reports: out },
    )?;
    println!("deviation: {count} reports, worst capacity/bound ratio {worst:.4}");
    Ok(())
}

fn run_exceptional(cli: &Cli, config: &ExperimentConfig) -> Result<()> {
    let section = config
        .exceptional
        .clone()
        .unwrap_or(config::ExceptionalSection {
            depth: 8,
            bound: 16,
        });
    let map = config.build_map()?;
    let found = exceptional_scan(map.as_ref(), section.depth, section.bound)?;
    let out = ExceptionalOut {
        found: output::coords_of(&found),
        depth: section.depth,
        bound: section.bound,
        note: "search covers periodic seeds of period <= 3 plus the chart-distinguished \
               points; it bounds the exceptional set only over those candidates, with no \
               a-priori cardinality bound"
            .into(),
    };
    write_json_report(&output::sibling(&cli.out, "_exceptional", "json"), &out)?;
    println!("exceptional: {} point(s) found", out.found.len());
    Ok(())
}

fn run_mixing(cli: &Cli, config: &ExperimentConfig) -> Result<()> {
    let section = config
        .mixing
        .as_ref()
        .context("config field `mixing`: section required")?;
    let map = config.build_map()?;
    let dict = dictionary_for(map.as_ref(), config);
    let mu = build_measure(config, map.as_ref(), &section.measure)?;
    let phi = resolve_observable(&dict, &section.phi)?;
    let psi = resolve_observable(&dict, &section.psi)?;
    let report = mixing_correlation(
        map.as_ref(),
        &mu,
        phi.as_ref(),
        psi.as_ref(),
        section.k_max,
        &dict,
    );
    if cli.format == "csv" {
        write_mixing_csv(&output::sibling(&cli.out, "_mixing", "csv"), &report)?;
    }
    write_json_report(&output::sibling(&cli.out, "_mixing", "json"), &report)?;
    let tail = report.correlations.last().map(|(_, c)| *c).unwrap_or(0.0);
    println!(
        "mixing: invariance residual {:.3e}, correlation at k={} is {:.3e}",
        report.invariance_residual, section.k_max, tail
    );
    Ok(())
}
