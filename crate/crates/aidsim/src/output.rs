//! CSV files and the text report.
//!
//! Every file has one header row; times are in seconds, speeds in m/s,
//! flows in vehicles per hour. Rows follow level order, then replication,
//! then record order, so identical runs give identical files.
//!
//! | file | one row per |
//! |------|-------------|
//! | `summary.csv` | replication: throughput, mean delay, vehicle counts |
//! | `trips.csv` | vehicle completing its trip after the warm-up |
//! | `bins.csv` | 5-minute window of the network (`source = network`) or of a detector |
//! | `trajectories.csv` | trajectory sample, only with trajectories on |
//! | `ci.csv` | level and metric: mean with a 90% bootstrap interval |
//! | `anova.csv` | level: mean per-bin delay, Tukey letters, F and p (sweeps only) |

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use aidsim_core::engine::{delay_bins, measure_delay, measure_throughput, throughput_bins, RunRecord};
use aidsim_core::netmodel::build;
use aidsim_core::stats::Interval;
use serde::Serialize;

use crate::analysis::{DelayAnova, LevelSummary, CI_LEVEL, TUKEY_CONFIDENCE};
use crate::experiment::LevelRun;

#[derive(Serialize)]
struct SummaryRow<'a> {
    level: &'a str,
    replication: u32,
    seed: u64,
    throughput_vph: f64,
    delay_s: Option<f64>,
    trips: usize,
    generated: u64,
    completed: u64,
    in_network: u64,
    pending: u64,
    collisions: usize,
    valid: bool,
}

#[derive(Serialize)]
struct TripRow<'a> {
    level: &'a str,
    replication: u32,
    vehicle: u64,
    origin: usize,
    route: usize,
    class: &'static str,
    confused: bool,
    arrival: f64,
    entry: f64,
    exit: f64,
    free_flow_time: f64,
    delay: f64,
}

#[derive(Serialize)]
struct BinRow<'a> {
    level: &'a str,
    replication: u32,
    source: &'a str,
    start: f64,
    end: f64,
    count: u32,
    flow_vphpl: Option<f64>,
    speed_mps: Option<f64>,
    mean_delay_s: Option<f64>,
}

#[derive(Serialize)]
struct TrajectoryRow<'a> {
    level: &'a str,
    replication: u32,
    vehicle: u64,
    t: f64,
    link: &'a str,
    lane: u8,
    position: f64,
    route_distance: f64,
    speed: f64,
    confused: bool,
}

#[derive(Serialize)]
struct CiRow<'a> {
    level: &'a str,
    metric: &'a str,
    n: usize,
    mean: f64,
    low: f64,
    high: f64,
    confidence: f64,
    degenerate: bool,
}

#[derive(Serialize)]
struct AnovaRow<'a> {
    metric: &'a str,
    level: &'a str,
    n: usize,
    mean: f64,
    letters: &'a str,
    f: f64,
    p: f64,
    df_between: f64,
    df_within: f64,
    q_crit: f64,
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()
}

fn each_record(runs: &[LevelRun]) -> impl Iterator<Item = (&str, &RunRecord)> {
    runs.iter().flat_map(|l| l.records.iter().map(move |r| (l.label.as_str(), r)))
}

/// Writes every output file into `dir`, creating it if needed.
pub fn write_outputs(
    dir: &Path,
    runs: &[LevelRun],
    summaries: &[LevelSummary],
    anova: Option<&DelayAnova>,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write_rows(
        &dir.join("summary.csv"),
        each_record(runs).map(|(level, r)| SummaryRow {
            level,
            replication: r.replication,
            seed: r.seed,
            throughput_vph: measure_throughput(r),
            delay_s: measure_delay(r),
            trips: r.trips.len(),
            generated: r.counts.generated,
            completed: r.counts.completed,
            in_network: r.counts.in_network,
            pending: r.counts.pending,
            collisions: r.collisions(),
            valid: r.is_valid(),
        }),
    )?;
    write_rows(
        &dir.join("trips.csv"),
        each_record(runs).flat_map(|(level, r)| {
            r.trips.iter().map(move |t| TripRow {
                level,
                replication: r.replication,
                vehicle: t.vehicle,
                origin: t.origin,
                route: t.route,
                class: t.class.as_str(),
                confused: t.confused,
                arrival: t.arrival,
                entry: t.entry,
                exit: t.exit,
                free_flow_time: t.free_flow_time,
                delay: t.delay,
            })
        }),
    )?;
    write_rows(&dir.join("bins.csv"), each_record(runs).flat_map(|(level, r)| bin_rows(level, r)))?;
    let any_trajectories = runs.iter().any(|l| l.config.run.trajectories);
    if any_trajectories {
        write_trajectories(&dir.join("trajectories.csv"), runs)?;
    }
    let mut ci = Vec::new();
    for s in summaries {
        ci.push(ci_row(&s.label, "throughput_vph", s.replications, &s.throughput));
        if let Some(d) = &s.delay {
            ci.push(ci_row(&s.label, "delay_s", s.replications, d));
        }
    }
    write_rows(&dir.join("ci.csv"), ci)?;
    if let Some(a) = anova {
        write_rows(
            &dir.join("anova.csv"),
            a.groups.iter().enumerate().map(|(i, g)| AnovaRow {
                metric: "delay_s",
                level: &g.label,
                n: g.n(),
                mean: a.tukey.means[i],
                letters: &a.tukey.letters[i],
                f: a.anova.f,
                p: a.anova.p,
                df_between: a.anova.df_between,
                df_within: a.anova.df_within,
                q_crit: a.tukey.q_crit,
            }),
        )?;
    }
    fs::write(dir.join("report.txt"), report(runs, summaries, anova))
}

fn ci_row<'a>(level: &'a str, metric: &'a str, n: usize, i: &Interval) -> CiRow<'a> {
    CiRow {
        level,
        metric,
        n,
        mean: i.mean,
        low: i.low,
        high: i.high,
        confidence: CI_LEVEL,
        degenerate: i.degenerate,
    }
}

fn bin_rows<'a>(level: &'a str, r: &'a RunRecord) -> Vec<BinRow<'a>> {
    let mut rows = Vec::new();
    let delays = delay_bins(r);
    for (b, count) in throughput_bins(r).into_iter().enumerate() {
        let start = r.warmup + b as f64 * r.bin_width;
        rows.push(BinRow {
            level,
            replication: r.replication,
            source: "network",
            start,
            end: (start + r.bin_width).min(r.duration),
            count,
            flow_vphpl: None,
            speed_mps: None,
            mean_delay_s: delays[b],
        });
    }
    for b in &r.detector_bins {
        rows.push(BinRow {
            level,
            replication: r.replication,
            source: &r.detector_names[b.detector],
            start: b.start,
            end: b.end,
            count: b.count,
            flow_vphpl: Some(b.flow_vphpl()),
            speed_mps: b.space_mean_speed(),
            mean_delay_s: None,
        });
    }
    rows
}

fn write_trajectories(path: &Path, runs: &[LevelRun]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for l in runs {
        let net = build(&l.config).map_err(io::Error::other)?;
        for r in &l.records {
            for s in &r.trajectories {
                w.serialize(TrajectoryRow {
                    level: &l.label,
                    replication: r.replication,
                    vehicle: s.vehicle,
                    t: s.t,
                    link: &net.links[s.link].name,
                    lane: s.lane,
                    position: s.position,
                    route_distance: s.route_distance,
                    speed: s.speed,
                    confused: s.confused,
                })
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()
}

/// Plain-text tables: per-level throughput and delay with intervals, then
/// the delay ANOVA with Tukey letters and pairwise p-values.
pub fn report(runs: &[LevelRun], summaries: &[LevelSummary], anova: Option<&DelayAnova>) -> String {
    let mut s = String::new();
    if let Some(first) = runs.first() {
        let c = &first.config;
        let _ = writeln!(
            s,
            "network {}  duration {} s  warm-up {} s  step {} s  base seed {}",
            c.network.kind.as_str(),
            c.run.duration,
            c.run.warmup,
            c.run.step,
            c.run.seed
        );
    }
    let width = summaries.iter().map(|x| x.label.len()).max().unwrap_or(5).max(5);
    let _ = writeln!(
        s,
        "\n{:<width$}  {:>4}  {:>26}  {:>26}  {:>10}",
        "level",
        "reps",
        "throughput vph [90% CI]",
        "delay s/veh [90% CI]",
        "collisions"
    );
    for x in summaries {
        let q = &x.throughput;
        let d = x.delay.map_or("-".to_string(), |d| format!("{:.2} [{:.2}, {:.2}]", d.mean, d.low, d.high));
        let _ = writeln!(
            s,
            "{:<width$}  {:>4}  {:>26}  {:>26}  {:>10}",
            x.label,
            x.replications,
            format!("{:.1} [{:.1}, {:.1}]", q.mean, q.low, q.high),
            d,
            x.collisions
        );
    }
    if let Some(a) = anova {
        let _ = writeln!(
            s,
            "\nOne-way ANOVA of 5-min network delay: F({}, {}) = {:.4}, p = {:.4e}",
            a.anova.df_between, a.anova.df_within, a.anova.f, a.anova.p
        );
        let _ = writeln!(
            s,
            "Tukey HSD at {}%: q = {:.4}, MS within = {:.4}",
            TUKEY_CONFIDENCE * 100.0,
            a.tukey.q_crit,
            a.tukey.ms_within
        );
        let _ = writeln!(s, "\n{:<width$}  {:>5}  {:>10}  grouping", "level", "N", "mean");
        let mut order: Vec<usize> = (0..a.groups.len()).collect();
        order.sort_by(|&i, &j| a.tukey.means[i].total_cmp(&a.tukey.means[j]));
        for i in order {
            let _ = writeln!(
                s,
                "{:<width$}  {:>5}  {:>10.2}  {}",
                a.groups[i].label,
                a.groups[i].n(),
                a.tukey.means[i],
                a.tukey.letters[i]
            );
        }
        let _ = writeln!(s, "\npairwise adjusted p-values");
        let k = a.groups.len();
        for i in 0..k {
            for j in i + 1..k {
                let _ = writeln!(
                    s,
                    "  {} vs {}: diff {:.3}, p = {:.4e}{}",
                    a.groups[i].label,
                    a.groups[j].label,
                    a.tukey.means[j] - a.tukey.means[i],
                    a.tukey.p_values[i][j],
                    if a.tukey.significant[i][j] { " *" } else { "" }
                );
            }
        }
    }
    s
}
