//! Uncertainty-aware, consistency-based fault diagnosis with data-driven
//! residual generators.
//!
//! The crate is organised as a pipeline:
//!
//! - [`structural`]: structural models, DM decomposition, MSO enumeration,
//!   fault signature / isolability matrices and residual matching.
//! - [`simulator`]: three-tank, two-tank and cubic-toy data generation with
//!   fault injection.
//! - [`pnn`]: recurrent probabilistic regressor (LSTM with mean and standard
//!   deviation heads) and its two-phase training schedule.
//! - [`ensemble`]: mixture moments and the aleatoric/epistemic split.
//! - [`decision`]: three-way residual decisions and minimal diagnoses.
//! - [`metrics`]: sensitivity and isolation performance matrices plus the
//!   scalar comparison metrics.
//! - [`harness`]: experiment configuration, orchestration and the CLI.

pub mod decision;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod pnn;
pub mod simulator;
pub mod structural;
mod util;
pub use util::config_hash;

pub use error::{Error, Result};
