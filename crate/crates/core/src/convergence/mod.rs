//! Monte Carlo strong-error estimation on coupled Brownian lattices.
//!
//! Each realization draws one lattice at the finest step and coarsens it to
//! every tested step, so all resolutions see the same Brownian path.

mod brownian;
mod experiment;
mod fit;
mod output;
mod probe;

pub use brownian::{generate_lattice, realization_rng, BrownianLattice};
pub use experiment::{
    rmse_experiment, squared_errors, ConvergenceReport, ErrorNorm, Experiment, Reference, SquaredErrors,
    DEFAULT_REFERENCE_DT, FLOOR_EXCLUSION_FACTOR,
};
pub use fit::{fit_order, mean_with_stderr, pairwise_sum, rmse_with_stderr, OrderFit};
pub use output::{
    convergence_json, format_float, probe_json, to_json, write_convergence_csv, write_json, write_probe_csv,
    write_trajectory_csv, CONVERGENCE_COLUMNS, PROBE_COLUMNS, SPEC_VERSION,
};
pub use probe::{local_error_probe, Probe, ProbeReport, ProbeRow, DEFAULT_SUBSTEPS};
