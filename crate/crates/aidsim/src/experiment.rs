//! Replication fan-out over sweep levels.

use aidsim_core::engine::{replication_seed, run_on, RunRecord};
use aidsim_core::netmodel::build;
use aidsim_core::ScenarioConfig;
use rayon::prelude::*;

use crate::scenario::ScenarioError;

/// All replications of one sweep level, in replication order.
#[derive(Debug, Clone)]
pub struct LevelRun {
    pub label: String,
    pub config: ScenarioConfig,
    pub records: Vec<RunRecord>,
}

/// Runs `run.replications` replications of every level on `jobs` threads
/// (`0` = one per core). Replication `i` of every level uses the same
/// seed, derived from the level's base seed, so results do not depend on
/// the schedule.
pub fn run_levels(levels: Vec<(String, ScenarioConfig)>, jobs: usize) -> Result<Vec<LevelRun>, ScenarioError> {
    let nets = levels
        .iter()
        .map(|(_, c)| build(c))
        .collect::<Result<Vec<_>, _>>()?;
    let work: Vec<(usize, u32)> = levels
        .iter()
        .enumerate()
        .flat_map(|(l, (_, c))| (0..c.run.replications).map(move |r| (l, r)))
        .collect();
    let run = || -> Vec<RunRecord> {
        work.par_iter()
            .map(|&(l, r)| {
                let cfg = &levels[l].1;
                run_on(&nets[l], cfg, r, replication_seed(cfg, r))
            })
            .collect()
    };
    let records = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_or_else(|_| run(), |pool| pool.install(run));
    let mut out: Vec<LevelRun> = levels
        .into_iter()
        .map(|(label, config)| LevelRun {
            label,
            config,
            records: Vec::new(),
        })
        .collect();
    for ((l, _), rec) in work.into_iter().zip(records) {
        out[l].records.push(rec);
    }
    Ok(out)
}
