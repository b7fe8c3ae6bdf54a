//! Convergence diagnostics.

pub mod estimates;
pub mod ks;
pub mod marginal;
pub mod oscillation;
pub mod report;
pub mod strong;
pub mod witness;

pub use estimates::{
    c1_constant, calibrate_constants, check_tail_estimates, simulate_tail_samples, tail_sample, TailCheckRow,
    TailConstants, TailSample,
};
pub use ks::{energy_distance, ks_statistic, ks_two_sample, ReferenceCdf};
pub use marginal::{marginal_convergence, simulate_marginals, MarginalReference, MarginalTable, SchemeCell};
pub use oscillation::{oscillation_diagnostic, OscillationTable};
pub use report::{ConvergenceRow, ExperimentReport, ReportEntry, SchemeParams};
pub use strong::{median, strong_convergence_study, StrongStudy};
pub use witness::{s_tightness_witness, WitnessReport};
