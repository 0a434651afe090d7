//! Allocation-only simulation core for comparing interchange designs under
//! mixed human-driven and connected-automated traffic.
//!
//! Everything in this crate is deterministic and free of IO: network
//! builders, longitudinal and lateral driver models, fixed-time signal
//! control, the time-stepped replication engine, and the statistics used to
//! summarise experiments. File formats and the command line live in the
//! `aidsim` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod config;
pub mod control;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod netmodel;
pub mod rng;
pub mod stats;
pub mod units;

pub use config::ScenarioConfig;
pub use error::{ConfigViolation, Error};
pub use netmodel::{NetworkKind, RoadNetwork};
