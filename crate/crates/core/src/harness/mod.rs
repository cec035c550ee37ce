//! Experiment pipelines, persistence and the manifest format.

pub mod io;
mod run;
mod spec;

pub use run::{run_experiment, CheckRecord, InstanceRecord, Manifest, RunReport, BOUND_TOL};
pub use spec::{desk_limit, ExperimentId, ExperimentSpec, Fleet, WitnessConfig};
