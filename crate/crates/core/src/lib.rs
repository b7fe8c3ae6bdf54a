//! Reflected SDEs on convex domains: projections, the Skorokhod problem,
//! penalized approximations and their grid schemes, plus convergence
//! diagnostics.

pub mod domain;
pub mod error;
pub mod linalg;
pub mod path;
pub mod penalty;
pub mod sde;
pub mod skorokhod;
pub mod stats;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use domain::{ConvexDomain, HalfSpace, ProjectionResult, Shape, BOUNDARY_TOL};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use path::{modulus_bar, Cadlag, StepPath};
pub use penalty::{lemma_bounds, solve_penalized, LemmaBounds, PenalizedPath};
pub use sde::{
    euler_penalized, euler_projected, sample_driver, stochastic_integral, Coefficient, DriverSpec, Grid, HSpec,
    JumpLaw, ZComponent,
};
pub use skorokhod::{oracle_halfline, solve_skorokhod, verify_solution, SkorokhodSolution, VerificationReport};
