//! Experiment harness: initial states, single trajectories, convergence
//! studies and stability sweeps, all emitting CSV.

mod convergence;
mod init;
mod run;
mod sweep;

pub use convergence::{
    fit_slope, run_convergence_study, write_convergence_csv, ConvergenceConfig, ConvergenceRow,
    ConvergenceTable,
};
pub use init::{init_state, random_unit_field, InitSpec};
pub use run::{
    run_simulation, run_simulation_on, write_trace_csv, MeshSpec, RunConfig, RunOutcome, TraceRow,
    Verdict, RELAX_GRAD_SQ,
};
pub use sweep::{run_stability_sweep, write_sweep_csv, SweepCell};
