//! Agent-based Monte Carlo simulator comparing progression regimes in a
//! prerequisite-constrained degree programme: regularity with deferred
//! finals (A), direct promotion (B) and direct promotion with a remedial
//! safety net (C).

// `!(x > 0.0)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod calibration;
pub mod config;
pub mod curriculum;
pub mod engine;
pub mod error;
pub mod output;
pub mod policy;
pub mod population;
pub mod psychodynamics;
pub mod rng;
pub mod sweep;

pub use config::{Experiment, ExperimentConfig};
pub use error::{Error, Result};
pub use policy::ScenarioKind;
