//! Per-replication output and the measures computed from it.

use alloc::string::String;
use alloc::vec::Vec;

use crate::dynamics::VehicleClass;

/// One vehicle that left the network during the measurement period.
#[derive(Debug, Clone, PartialEq)]
pub struct TripRecord {
    pub vehicle: u64,
    pub origin: usize,
    pub route: usize,
    pub class: VehicleClass,
    pub confused: bool,
    /// Demand arrival time at the network boundary, s.
    pub arrival: f64,
    /// Time the vehicle was placed on its entry link (later than
    /// `arrival` when the entry was blocked), s.
    pub entry: f64,
    pub exit: f64,
    pub free_flow_time: f64,
    /// `exit - entry - free_flow_time`, clamped at 0. Time spent waiting
    /// to enter is reported separately by `entry_wait`.
    pub delay: f64,
}

impl TripRecord {
    /// Time spent in the network, s.
    pub fn travel_time(&self) -> f64 {
        self.exit - self.entry
    }

    /// Time between demand arrival and entry, s.
    pub fn entry_wait(&self) -> f64 {
        self.entry - self.arrival
    }
}

/// Crossings aggregated over one detector window.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorBin {
    pub detector: usize,
    pub start: f64,
    pub end: f64,
    pub count: u32,
    pub lanes: u32,
    /// Sum of reciprocal crossing speeds, s/m.
    pub inverse_speed_sum: f64,
}

impl DetectorBin {
    pub fn flow_vphpl(&self) -> f64 {
        self.count as f64 * 3600.0 / (self.end - self.start) / self.lanes as f64
    }

    /// Harmonic mean of crossing speeds, m/s; `None` without crossings.
    pub fn space_mean_speed(&self) -> Option<f64> {
        (self.count > 0).then(|| self.count as f64 / self.inverse_speed_sum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub vehicle: u64,
    pub t: f64,
    pub link: usize,
    pub lane: u8,
    pub position: f64,
    /// Distance travelled along the route, m.
    pub route_distance: f64,
    pub speed: f64,
    pub confused: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// Overlap between leader and follower; the follower was stopped.
    Collision { leader: u64, follower: u64, link: usize },
    /// Entry was blocked; the vehicle entered `waited` seconds late.
    SpawnDeferred { origin: usize, waited: f64 },
    /// A vehicle reached the end of a lane with no way forward and was held.
    DeadEnd { link: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub vehicle: u64,
    pub kind: EventKind,
}

/// Vehicle counts used by the conservation check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub generated: u64,
    pub completed: u64,
    pub in_network: u64,
    pub pending: u64,
}

impl Counts {
    pub fn conserved(&self) -> bool {
        self.generated == self.completed + self.in_network + self.pending
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub replication: u32,
    pub seed: u64,
    pub warmup: f64,
    pub duration: f64,
    pub bin_width: f64,
    pub trips: Vec<TripRecord>,
    pub detector_names: Vec<String>,
    pub detector_bins: Vec<DetectorBin>,
    pub trajectories: Vec<TrajectorySample>,
    pub events: Vec<Event>,
    pub counts: Counts,
    /// Highest ratio of speed to the vehicle's speed cap seen in the run.
    pub max_speed_ratio: f64,
}

impl RunRecord {
    pub fn measurement_period(&self) -> f64 {
        self.duration - self.warmup
    }

    pub fn collisions(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Collision { .. }))
            .count()
    }

    /// Records with collisions are excluded from acceptance statistics.
    pub fn is_valid(&self) -> bool {
        self.collisions() == 0
    }

    pub fn bin_count(&self) -> usize {
        libm::ceil(self.measurement_period() / self.bin_width - 1e-9) as usize
    }

    /// Bin of a measurement-period time, `None` outside the period.
    pub fn bin_of(&self, t: f64) -> Option<usize> {
        if t < self.warmup || t > self.duration {
            return None;
        }
        Some((((t - self.warmup) / self.bin_width) as usize).min(self.bin_count() - 1))
    }
}

/// Mean delay per completed trip, s; `None` without trips.
pub fn measure_delay(record: &RunRecord) -> Option<f64> {
    mean(record.trips.iter().map(|t| t.delay))
}

/// Completed trips per hour of measurement.
pub fn measure_throughput(record: &RunRecord) -> f64 {
    record.trips.len() as f64 * 3600.0 / record.measurement_period()
}

/// Mean trip delay of the trips finishing in each measurement bin. Empty
/// bins give `None`.
pub fn delay_bins(record: &RunRecord) -> Vec<Option<f64>> {
    let n = record.bin_count();
    let mut sum = alloc::vec![0.0; n];
    let mut count = alloc::vec![0u32; n];
    for t in &record.trips {
        if let Some(b) = record.bin_of(t.exit) {
            sum[b] += t.delay;
            count[b] += 1;
        }
    }
    (0..n).map(|b| (count[b] > 0).then(|| sum[b] / count[b] as f64)).collect()
}

/// Completed trips per measurement bin.
pub fn throughput_bins(record: &RunRecord) -> Vec<u32> {
    let mut count = alloc::vec![0u32; record.bin_count()];
    for t in &record.trips {
        if let Some(b) = record.bin_of(t.exit) {
            count[b] += 1;
        }
    }
    count
}

/// `(flow vph/lane, space-mean speed m/s)` for each window of a detector.
pub fn detector_bins(record: &RunRecord, detector: &str) -> Option<Vec<(f64, Option<f64>)>> {
    let id = record.detector_names.iter().position(|n| n == detector)?;
    Some(
        record
            .detector_bins
            .iter()
            .filter(|b| b.detector == id)
            .map(|b| (b.flow_vphpl(), b.space_mean_speed()))
            .collect(),
    )
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}
