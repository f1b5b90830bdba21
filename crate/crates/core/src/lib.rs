//! Trajectory optimization for a single rigid-body legged model: hybrid-mode
//! direct collocation, transferability limits, maneuver libraries and a
//! reference-tracking reward.

pub mod cli;
pub mod config;
pub mod constraints;
pub mod error;
pub mod library;
pub mod maneuvers;
pub mod reward;
pub mod solver;
pub mod srbm;
pub mod transcription;

pub use error::{Error, Result};
