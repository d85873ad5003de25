//! Benchmark models, random inputs, the experiment harnesses and their CSV output.

mod config;
mod experiments;
mod models;
mod output;
mod random;

pub use config::{ExperimentConfig, MatrixSpec};
pub use experiments::{
    audit_rows, bound_audit, convergence_experiment, fit_slope, observable_decay_experiment, simulate,
    unravel_experiment, AuditRow, ConvergenceReport, ConvergenceRow, DecayRow, SimulationRow, SlopeFit, UnravelReport,
    FIT_WINDOW,
};
pub use models::{build_model, model_catalog, ModelSpec};
pub use output::{
    fmt_float, write_audit_csv, write_convergence_csv, write_decay_csv, write_simulation_csv, write_slopes_csv,
    write_stability_csv, write_unravel_csv,
};
pub use random::{
    initial_state_for, random_density, random_density_with, random_model, random_product_density, random_pure_state,
    random_unitary, sample_rng,
};
