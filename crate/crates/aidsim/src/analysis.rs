//! Per-level summaries with bootstrap intervals, and the delay ANOVA.
//!
//! The ANOVA observation unit is the mean delay of the trips finishing in
//! one 5-minute bin, pooled over all replications of a level (12 bins per
//! replication at the default settings). Bins without trips are left out.

use aidsim_core::engine::{delay_bins, measure_delay, measure_throughput};
use aidsim_core::rng::{RandomStream, StreamKind};
use aidsim_core::stats::{anova_oneway, bootstrap_ci, tukey_hsd, Anova, Interval, SampleGroup, TukeyResult};

use crate::experiment::LevelRun;

pub const CI_LEVEL: f64 = 0.90;
pub const RESAMPLES: usize = 1000;
pub const TUKEY_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub label: String,
    pub replications: usize,
    pub throughput: Interval,
    /// `None` when no replication completed a trip.
    pub delay: Option<Interval>,
    pub collisions: usize,
    pub conserved: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayAnova {
    pub groups: Vec<SampleGroup>,
    pub anova: Anova,
    pub tukey: TukeyResult,
}

/// Throughput and delay of each replication, with 90% percentile
/// bootstrap intervals of their means.
pub fn summarize(run: &LevelRun) -> Result<LevelSummary, aidsim_core::Error> {
    let seed = run.config.run.seed;
    let stream = || RandomStream::new(seed).substream(StreamKind::Bootstrap);
    let q: Vec<f64> = run.records.iter().map(measure_throughput).collect();
    let d: Vec<f64> = run.records.iter().filter_map(measure_delay).collect();
    Ok(LevelSummary {
        label: run.label.clone(),
        replications: run.records.len(),
        throughput: bootstrap_ci(&q, CI_LEVEL, RESAMPLES, &mut stream())?,
        delay: if d.is_empty() {
            None
        } else {
            Some(bootstrap_ci(&d, CI_LEVEL, RESAMPLES, &mut stream())?)
        },
        collisions: run.records.iter().map(|r| r.collisions()).sum(),
        conserved: run.records.iter().all(|r| r.counts.conserved()),
    })
}

/// Pooled per-bin network delays of one level.
pub fn delay_observations(run: &LevelRun) -> Vec<f64> {
    run.records.iter().flat_map(|r| delay_bins(r).into_iter().flatten()).collect()
}

/// One-way ANOVA and Tukey HSD of per-bin delay across levels; `None`
/// with fewer than two levels.
pub fn delay_anova(runs: &[LevelRun]) -> Result<Option<DelayAnova>, aidsim_core::Error> {
    if runs.len() < 2 {
        return Ok(None);
    }
    let groups: Vec<SampleGroup> = runs
        .iter()
        .map(|r| SampleGroup::new(r.label.clone(), delay_observations(r)))
        .collect();
    let anova = anova_oneway(&groups)?;
    let tukey = tukey_hsd(&groups, TUKEY_CONFIDENCE)?;
    Ok(Some(DelayAnova { groups, anova, tukey }))
}
