//! Exact classical simulation and performance bounds for Grover-mixer QAOA.
//!
//! Everything works on the compressed objective-value basis: a problem
//! instance is reduced to an [`ObjectiveDistribution`] once, after which
//! circuit simulation, bounds and parameter search cost O(p · classes).

pub mod bounds;
pub mod calibrate;
pub mod distribution;
pub mod error;
pub mod harness;
pub mod problems;
pub mod seeds;
pub mod simulator;

pub use distribution::ObjectiveDistribution;
pub use error::{Error, Result};
pub use problems::{Orientation, ProblemInstance, ProblemKind, Solution};
pub use simulator::{CircuitParams, CompressedState, PhaseFunction, StateMetrics};
