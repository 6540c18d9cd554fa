//! Perceptual quality scoring of 2D crowd trajectories.
//!
//! The crate measures 21 trajectory features on a crowd, compares them with
//! statistics fitted on reference data and combines the per-feature costs into
//! a single quality score. Feature weights can be learned from labeled crowds
//! with a genetic algorithm, and the same optimizer tunes the parameters of
//! the bundled social-forces simulator by maximizing the score.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
pub mod error;
pub mod features;
pub mod fundamental;
pub mod ga;
pub mod geometry;
pub mod io;
pub mod kvfile;
pub mod learn;
pub mod qf;
pub mod sim;
pub mod trajectory;
pub mod tune;

pub use error::{Error, Result};
pub use features::{extract, FeatureId, FeatureParams, FeatureSamples, FeatureSet, Granularity};
pub use fundamental::FundamentalDiagram;
pub use ga::{ga_optimize, GaConfig, GaResult, Genome, StopReason};
pub use learn::{build_training_set, degrade, train_weights, DegradeMode, TrainingExample};
pub use qf::{fit_reference, radar, score, QualityScore, ReferenceStats, WeightVector};
pub use sim::{has_collision, simulate, Scenario, ScenarioKind, SocialForcesParams};
pub use tune::{quartile, tune, Quartile, TuneConfig, TuneMode, TuneResult};
pub use trajectory::{
    derive_kinematics, resample, validate, AgentId, AgentTrack, CrowdTrajectory, CANONICAL_DT,
};
