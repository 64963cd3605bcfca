//! Distributional unlearning: choose which forget-set samples to delete so a
//! refit model moves away from `p1` in KL while staying close to `p2`.
//!
//! Frontiers live in [`frontier`], guarantees and budgets in [`bounds`], the
//! deletion rules in [`mechanisms`], classifiers and metrics in
//! [`downstream`], and sweeps in [`harness`].

pub mod bounds;
pub mod data;
pub mod downstream;
pub mod error;
pub mod frontier;
pub mod gaussian;
pub mod harness;
pub mod matrix;
pub mod mechanisms;
pub mod rng;

pub use bounds::{Budget, Guarantee, GuaranteeBound, Mechanism};
pub use data::{Group, LabeledDataset};
pub use error::{Error, Result};
pub use frontier::TradeoffPoint;
pub use gaussian::GaussianModel;
pub use harness::{SweepConfig, SweepResult};
pub use matrix::FeatureMatrix;
pub use mechanisms::{RemovalPlan, ScoredSample, ScoringRule};
