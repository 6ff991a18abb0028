//! Dual-identity-association (DIA) ISAC beam tracking for multi-UAV mmWave networks.
//!
//! The crate simulates a ground base station that serves a fleet of UAVs with
//! narrow planar-array beams while tracking them from their radar echoes.
//! Echoes carry no digital identity, so every slot the station has to decide
//! which anonymous echo belongs to which tracked UAV before it can update its
//! filters and point the next beams.
//!
//! Modules, bottom-up:
//!
//! - [`array`]: UPA steering vectors, beam gains, LoS channel, SNR and rate.
//! - [`scenario`]: fleet initialization and ground-truth motion.
//! - [`sensing`]: SNR-dependent echo measurement model.
//! - [`tracking`]: the EKF and its measurement Jacobian.
//! - [`identity`]: prevalence-weighted physical-identity similarity.
//! - [`matching`]: f1 + f2 assignment solvers behind a name registry.
//! - [`harness`]: association schemes, trials, Monte-Carlo runs and the CLI.

pub mod array;
pub mod error;
pub mod harness;
pub mod identity;
pub mod matching;
pub mod scenario;
pub mod sensing;
pub mod tracking;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
