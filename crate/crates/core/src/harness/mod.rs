//! Experiment orchestration and the command-line front end.

pub mod cli;
mod config;
mod cubic;
mod data;
mod pipeline;

pub use config::{
    AblationSection, DecisionSection, EnsembleSection, ExperimentConfig, ExternalScenario, ExternalSection,
    ResidualSelection, ScenarioConfig, ScenarioDef, SimulationSection, SystemKind,
};
pub use cubic::{evaluate_cubic, run_cubic, train_cubic, CubicBin, CubicExperimentConfig, CubicReport, CubicRun};
pub use data::{derive_seed, ingest_external, load_data, DataBundle, Scenario};
pub use pipeline::*;
