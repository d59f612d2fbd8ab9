//! Exact finite-size ASEP with open boundaries.

mod generator;
mod observables;
mod params;
mod phase;
mod stationary;

pub use generator::{build_generator, build_generator_with_limit, RateMatrix, DEFAULT_N_MAX};
pub use observables::{height_laplace_exact, joint_pgf_exact, site_count, Centering, HeightQuery};
pub use params::{abcd_from_asep, kappa, particle_hole_dual, AbcdParams, AsepParams, Sign};
pub use phase::{bulk_density, classify_phase, Phase, PHASE_EPS};
pub use stationary::{stationary_exact, StationaryTable, DENSE_N_MAX, RESIDUAL_LIMIT};

/// Stationary table of the `n`-site chain.
pub fn solve(n: usize, p: &AsepParams) -> crate::Result<StationaryTable> {
    stationary_exact(&build_generator(n, p)?)
}
