//! Adaptive sparse channel estimation under impulsive noise.
//!
//! This crate implements four adaptive FIR estimators — LMS, the sign-error
//! LAE, and their reweighted-L1 penalized variants RL1-LMS and RL1-LAE —
//! together with seeded signal generators (sparse channels, Gaussian
//! training input, Gaussian-mixture impulsive noise) and a Monte-Carlo
//! harness that averages normalized-MSE learning curves over independent
//! trials.
//!
//! The `chanest` binary exposes scenario configs, presets and sweeps; see
//! [`cli`].

pub mod cli;
pub mod experiment;
pub mod filters;
pub mod signals;

pub use experiment::{
    normalized_mse, run_monte_carlo, run_trial, steady_state_mse, MseTrajectory, ScenarioConfig,
};
pub use filters::{Algorithm, FilterParams, FilterState, StepRecord, WeightVector};
pub use signals::{ChannelSpec, GmmNoiseParams, TrialSignals};
