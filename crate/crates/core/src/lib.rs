//! Simulator and decision engine for robot bite acquisition.
//!
//! The crate models a plate of food whose physical properties are only
//! partially observable, a stochastic simulator for manipulation skills,
//! offline tool calibration, a categorical belief estimator refined from
//! visuo-haptic features, an affordance-based skill planner and an
//! evaluation harness that reports attempt-based success rates.

pub mod backend;
pub mod calibration;
pub mod error;
pub mod estimator;
pub mod model;
pub mod planner;
pub mod rng;
pub mod runner;
pub mod sim;

pub use error::{Error, Result};

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of `bytes`.
pub fn digest_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
