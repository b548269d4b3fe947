//! Shared fixtures for the benchmark suite.

use num_complex::Complex64;
use uqr_core::measure::DiscreteMeasure;
use uqr_core::pullback::{pullback_iterate, PruneStrategy, PullbackConfig};
use uqr_core::sphere::{stereo_lift, ChartPoint, SpherePoint};
use uqr_core::RationalMap;

pub fn squaring() -> RationalMap {
    RationalMap::z_power(2)
}

pub fn interval_map() -> RationalMap {
    RationalMap::polynomial(&[-2.0, 0.0, 1.0]).unwrap()
}

pub fn generic_cubic() -> RationalMap {
    RationalMap::new(
        vec![
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::ONE,
        ],
        vec![
            Complex64::ONE,
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::ONE,
        ],
    )
    .expect("reduced cubic")
}

pub fn chart(re: f64, im: f64) -> SpherePoint {
    stereo_lift(ChartPoint::finite(re, im))
}

/// A 4096-atom pullback iterate of the interval map: the workhorse input
/// for the statistics benchmarks.
pub fn arcsine_measure() -> DiscreteMeasure {
    let config = PullbackConfig {
        max_atoms: 4096,
        prune: PruneStrategy::WeightResample,
        seed: 1,
    };
    pullback_iterate(&interval_map(), &chart(0.4, 0.3), 12, &config).expect("pullback runs")
}
