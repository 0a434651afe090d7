//! File formats, batch experiments and reporting on top of `aidsim-core`.
//!
//! A scenario file (see [`scenario`]) describes one experiment. Sweeps turn
//! it into levels, [`experiment::run_levels`] runs every replication of
//! every level, [`analysis`] reduces the records, and [`output`] writes the
//! CSV files and the text report.

pub mod analysis;
pub mod experiment;
pub mod output;
pub mod scenario;

pub use scenario::{Scenario, ScenarioError, Sweep};
