//! Seeded Monte-Carlo simulation of multi-stage trials.

pub mod config;
pub mod engine;
pub mod report;
pub mod rng;
pub mod scenarios;

pub use config::{CentreZMode, ScenarioConfig, WeightScheme};
pub use engine::{eta_from_rho, run_replicate, simulate_stage, ReplicateMetrics, StageStreams};
pub use report::{run_scenario, ScenarioOutcome, ScenarioReport};
