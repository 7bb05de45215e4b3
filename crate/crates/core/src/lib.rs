//! Learn-As-you-GO (LAGO) adaptive trials with fixed centre effects.
//!
//! Estimation of intervention-component effects from multi-centre,
//! multi-stage data, robust inference, cost-minimizing package search and a
//! seeded Monte-Carlo harness for whole trials.

pub mod analysis;
pub mod data;
pub mod design;
pub mod error;
pub mod inference;
pub mod io;
pub mod model;
pub mod optimizer;
pub mod sim;
pub mod stats;

pub use data::{Arm, InterventionPackage, TrialDataset, TrialRecord};
pub use error::{LagoError, Result};
pub use model::{fit, predict_mean, Estimand, ModelFit};
pub use optimizer::{optimize, recommend_next_stage, CostFunction, Direction, OptimizationProblem, Recommendation};
