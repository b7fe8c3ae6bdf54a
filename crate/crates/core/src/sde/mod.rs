//! Stochastic drivers, coefficients and grid schemes.

pub mod coefficient;
pub mod driver;
pub mod grid;
pub mod rng;
pub mod scheme;

pub use coefficient::{Coefficient, SampledCheck};
pub use driver::{DriverSpec, HSpec, JumpLaw, ZComponent};
pub use grid::Grid;
pub use rng::{stream, StreamKey, StreamRng};
pub use scheme::{euler_penalized, euler_projected, integral_path, stochastic_integral};

use rayon::prelude::*;

use crate::error::Result;
use crate::path::StepPath;

/// Samples `(Hρ, Zρ)` for one path.
pub fn sample_driver(spec: &DriverSpec, grid: &Grid, seed: u64, path_index: u64) -> Result<(StepPath, StepPath)> {
    spec.sample(grid, seed, path_index)
}

/// Runs `f` for path indices `0..paths` in parallel. The output is in path
/// order regardless of scheduling.
pub fn monte_carlo<T, F>(paths: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..paths as u64).into_par_iter().map(f).collect()
}
