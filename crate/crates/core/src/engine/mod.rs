//! Replication engine: demand, the stepped world, and run records.

mod demand;
mod plan;
mod record;
mod world;

use alloc::vec::Vec;

pub use demand::{assign_class, assign_confusion, choose_route, generate_arrivals, ArrivalProcess};
pub use plan::{RoutePlan, UNREACHABLE};
pub use record::{
    delay_bins, detector_bins, measure_delay, measure_throughput, throughput_bins, Counts, DetectorBin, Event,
    EventKind, RunRecord, TrajectorySample, TripRecord,
};
pub use world::{ballistic, Vehicle, World, DEAD_END_DECEL, LOOKAHEAD};

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::netmodel::{build, RoadNetwork};
use crate::rng::RandomStream;

/// Seed of replication `index` under the config's base seed.
pub fn replication_seed(cfg: &ScenarioConfig, index: u32) -> u64 {
    RandomStream::replication_seed(cfg.run.seed, index)
}

/// Runs one replication on an already built network.
pub fn run_on(net: &RoadNetwork, cfg: &ScenarioConfig, replication: u32, seed: u64) -> RunRecord {
    World::new(net, cfg, replication, seed).run()
}

/// Validates the config, builds its network and runs one replication.
pub fn run_replication(cfg: &ScenarioConfig, replication: u32, seed: u64) -> Result<RunRecord> {
    let net = build(cfg)?;
    Ok(run_on(&net, cfg, replication, seed))
}

/// Runs replications `0..n` one after another with counter-derived seeds.
pub fn run_experiment(cfg: &ScenarioConfig, n: u32) -> Result<Vec<RunRecord>> {
    let net = build(cfg)?;
    Ok((0..n).map(|i| run_on(&net, cfg, i, replication_seed(cfg, i))).collect())
}
