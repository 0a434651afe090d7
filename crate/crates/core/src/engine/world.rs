//! The time-stepped world of one replication.
//!
//! Each step first computes every vehicle's acceleration and lane wish from
//! the state at `t`, then applies lane changes in vehicle order (re-checking
//! gaps against changes already made), moves every vehicle with a clamped
//! ballistic update, and finally handles link transitions, exits, detector
//! crossings, collisions and new arrivals.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::demand::{assign_class, assign_confusion, choose_route, ArrivalProcess};
use super::plan::{RoutePlan, UNREACHABLE};
use super::record::{Counts, DetectorBin, Event, EventKind, RunRecord, TrajectorySample, TripRecord};
use crate::config::ScenarioConfig;
use crate::control::Indication;
use crate::dynamics::{
    confusion_speed_filter, lane_change_decision, longitudinal_accel, must_stop_for_signal, ConfusionBehavior,
    DriverParams, LaneCandidate, LaneChange, LaneChangeRules, LaneNeed, LeaderContext, Side, VehicleClass,
    EMERGENCY_DECEL,
};
use crate::netmodel::RoadNetwork;
use crate::rng::{RandomStream, StreamKind, Uniform};

/// Distance ahead within which vehicles, stop lines and lane ends are seen, m.
pub const LOOKAHEAD: f64 = 250.0;
/// Braking toward the end of a lane that does not continue is capped here.
pub const DEAD_END_DECEL: f64 = -6.0;
/// A released queue leader must be stopped within this distance of the line.
const QUEUE_HEAD_RANGE: f64 = 15.0;
/// Discretionary lane changes are considered every this many steps.
const DISCRETIONARY_EVERY: u64 = 5;
/// Vehicles on other feeder lanes are respected within this distance of a junction, m.
const MERGE_RANGE: f64 = 80.0;
/// Distance to the end of a dead-end lane within which a blocked mandatory
/// lane change is let in by the follower on the target lane, m.
const COURTESY_RANGE: f64 = 100.0;

/// One step of clamped ballistic kinematics: new speed and displacement.
/// A vehicle that would reverse within the step stops where its speed
/// reaches zero.
pub fn ballistic(v: f64, a: f64, dt: f64) -> (f64, f64) {
    let v1 = v + a * dt;
    if v1 < 0.0 {
        (0.0, -v * v / (2.0 * a))
    } else {
        (v1, (v + v1) / 2.0 * dt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: u64,
    pub class: VehicleClass,
    pub confused: bool,
    pub origin: usize,
    pub route: usize,
    /// Index of the current link within the route.
    pub route_idx: usize,
    pub link: usize,
    pub lane: u8,
    /// Front bumper position from the start of the link, m.
    pub pos: f64,
    pub speed: f64,
    pub accel: f64,
    pub length: f64,
    pub arrival: f64,
    pub entry: f64,
    pub free_flow_time: f64,
    pub startup_timer: f64,
    pub last_lane_change: f64,
    /// Link whose stop line this vehicle has committed to cross on yellow/red.
    pub committed: Option<usize>,
    /// Pending route decision `(route index, position)`; `None` once decided.
    pub decision: Option<(usize, f64)>,
    /// Decided at a late decision point: uses relaxed gap acceptance.
    pub relaxed: bool,
    /// Length of the route links already left behind, m.
    pub travelled: f64,
    /// Side of a mandatory lane change that found no gap last step, `0` if none.
    pub blocked: i8,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    id: u64,
    arrival: f64,
    class: VehicleClass,
    confused: bool,
    route: usize,
}

struct OriginState {
    arrivals: ArrivalProcess,
    class: Uniform,
    confusion: Uniform,
    route: Uniform,
    routes: Vec<usize>,
    shares: Vec<f64>,
    pending: VecDeque<Pending>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Command {
    accel: f64,
    change: i8,
    commit: Option<usize>,
    blocked: i8,
    /// Change made to clear the way for a blocked vehicle; needs no advantage.
    cooperative: bool,
}

struct Scan {
    accel: f64,
    gap: f64,
    commit: Option<usize>,
}

pub struct World<'a> {
    net: &'a RoadNetwork,
    params: [DriverParams; 2],
    rules: LaneChangeRules,
    confusion: ConfusionBehavior,
    confusion_share: f64,
    mpr: f64,
    vehicle_length: f64,
    dt: f64,
    warmup: f64,
    duration: f64,
    trajectory_every: Option<u64>,
    plans: Vec<RoutePlan>,
    lane_base: Vec<usize>,
    lanes: Vec<Vec<usize>>,
    feeders: Vec<Vec<(usize, u8)>>,
    stop_at: Vec<Option<usize>>,
    zones: Vec<Vec<(f64, f64)>>,
    link_detectors: Vec<Vec<usize>>,
    decision_at: Vec<[Option<(usize, f64)>; 2]>,
    indications: Vec<Indication>,
    vehicles: Vec<Vehicle>,
    origins: Vec<OriginState>,
    commands: Vec<Command>,
    step_index: u64,
    next_id: u64,
    record: RunRecord,
}

impl<'a> World<'a> {
    /// Empty network at `t = 0`. `cfg` supplies fleet, confusion and run
    /// settings; the network must already be validated.
    pub fn new(net: &'a RoadNetwork, cfg: &ScenarioConfig, replication: u32, seed: u64) -> Self {
        let mut lane_base = Vec::with_capacity(net.links.len());
        let mut slots = 0;
        for l in &net.links {
            lane_base.push(slots);
            slots += l.lane_count as usize;
        }
        let slot = |link: usize, lane: u8| lane_base[link] + lane as usize;

        let mut feeders = vec![Vec::new(); slots];
        for l in &net.links {
            for c in &l.connectors {
                for &(a, b) in &c.lanes {
                    feeders[slot(c.to.0, b)].push((l.id.0, a));
                }
            }
        }
        let mut stop_at = vec![None; slots];
        for (i, s) in net.stop_lines.iter().enumerate() {
            for &ln in &s.lanes {
                stop_at[slot(s.link.0, ln)] = Some(i);
            }
        }
        let mut zones = vec![Vec::new(); net.links.len()];
        for z in &net.confusion_zones {
            zones[z.link.0].push((z.start, z.end));
        }
        let mut link_detectors = vec![Vec::new(); net.links.len()];
        for (i, d) in net.detectors.iter().enumerate() {
            link_detectors[d.link.0].push(i);
        }
        // decision point per route: [normal drivers, confused drivers]
        let decision_at = net
            .routes
            .iter()
            .map(|r| {
                let find = |variant| {
                    net.decision_points
                        .iter()
                        .filter(|d| d.movement == r.movement && d.variant == variant)
                        .find_map(|d| r.links.iter().position(|&l| l == d.link).map(|i| (i, d.position)))
                };
                let normal = find(crate::netmodel::DecisionVariant::Normal);
                let late = find(crate::netmodel::DecisionVariant::Late).or(normal);
                [normal, late]
            })
            .collect();

        let stream = RandomStream::new(seed);
        let origins = net
            .origins
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let i = i as u32;
                OriginState {
                    arrivals: ArrivalProcess::new(o.vph, stream.substream(StreamKind::Arrivals(i))),
                    class: stream.substream(StreamKind::Class(i)),
                    confusion: stream.substream(StreamKind::Confusion(i)),
                    route: stream.substream(StreamKind::Route(i)),
                    routes: o.routes.iter().map(|r| r.0).collect(),
                    shares: o.routes.iter().map(|&r| net.route(r).share).collect(),
                    pending: VecDeque::new(),
                }
            })
            .collect();

        let run = &cfg.run;
        let bin_width = run.detector_window;
        let mut record = RunRecord {
            replication,
            seed,
            warmup: run.warmup,
            duration: run.duration,
            bin_width,
            trips: Vec::new(),
            detector_names: net.detectors.iter().map(|d| d.name.clone()).collect(),
            detector_bins: Vec::new(),
            trajectories: Vec::new(),
            events: Vec::new(),
            counts: Counts::default(),
            max_speed_ratio: 0.0,
        };
        let nb = record.bin_count();
        for (i, d) in net.detectors.iter().enumerate() {
            for b in 0..nb {
                let start = run.warmup + b as f64 * bin_width;
                record.detector_bins.push(DetectorBin {
                    detector: i,
                    start,
                    end: (start + bin_width).min(run.duration),
                    count: 0,
                    lanes: d.lanes.len() as u32,
                    inverse_speed_sum: 0.0,
                });
            }
        }

        World {
            net,
            params: [cfg.hv_params(), cfg.cav_params()],
            rules: cfg.fleet.lane_change,
            confusion: ConfusionBehavior {
                slowdown_factor: cfg.confusion.slowdown_factor,
            },
            confusion_share: cfg.confusion.share,
            mpr: cfg.fleet.mpr,
            vehicle_length: cfg.fleet.vehicle_length,
            dt: run.step,
            warmup: run.warmup,
            duration: run.duration,
            trajectory_every: run
                .trajectories
                .then(|| (libm::round(run.trajectory_interval / run.step) as u64).max(1)),
            plans: (0..net.routes.len())
                .map(|r| RoutePlan::new(net, crate::netmodel::RouteId(r)))
                .collect(),
            lane_base,
            lanes: vec![Vec::new(); slots],
            feeders,
            stop_at,
            zones,
            link_detectors,
            decision_at,
            indications: vec![Indication::Red; net.stop_lines.len()],
            vehicles: Vec::new(),
            origins,
            commands: Vec::new(),
            step_index: 0,
            next_id: 0,
            record,
        }
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.dt
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn events(&self) -> &[Event] {
        &self.record.events
    }

    pub fn counts(&self) -> Counts {
        Counts {
            in_network: self.vehicles.len() as u64,
            pending: self.origins.iter().map(|o| o.pending.len() as u64).sum(),
            ..self.record.counts
        }
    }

    fn params(&self, class: VehicleClass) -> &DriverParams {
        &self.params[(class == VehicleClass::Cav) as usize]
    }

    fn slot(&self, link: usize, lane: u8) -> usize {
        self.lane_base[link] + lane as usize
    }

    /// Speed cap of a vehicle on its link, before any confusion slowdown.
    fn speed_cap(&self, v: &Vehicle) -> f64 {
        self.params(v.class).desired_speed.min(self.net.links[v.link].speed_limit)
    }

    fn desired_speed(&self, v: &Vehicle) -> f64 {
        let in_zone = v.confused && self.zones[v.link].iter().any(|&(a, b)| v.pos >= a && v.pos <= b);
        confusion_speed_filter(self.speed_cap(v), v.confused, in_zone, &self.confusion)
    }

    /// Places a vehicle directly on the network, bypassing demand. Used to
    /// set up controlled situations; returns the new vehicle id.
    pub fn inject(&mut self, route: usize, class: VehicleClass, lane: u8, pos: f64, speed: f64) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.record.counts.generated += 1;
        let t = self.time();
        let v = self.make_vehicle(
            Pending {
                id,
                arrival: t,
                class,
                confused: false,
                route,
            },
            lane,
            pos,
            speed,
            t,
        );
        self.insert_sorted(v);
        id
    }

    fn make_vehicle(&self, p: Pending, lane: u8, pos: f64, speed: f64, t: f64) -> Vehicle {
        let route = &self.net.routes[p.route];
        let params = self.params(p.class);
        let free_flow_time = route
            .links
            .iter()
            .map(|&l| {
                let link = self.net.link(l);
                link.length / params.desired_speed.min(link.speed_limit)
            })
            .sum::<f64>()
            - pos / params.desired_speed.min(self.net.link(route.links[0]).speed_limit);
        let decision = self.decision_at[p.route][p.confused as usize];
        Vehicle {
            id: p.id,
            class: p.class,
            confused: p.confused,
            origin: route.origin,
            route: p.route,
            route_idx: 0,
            link: route.links[0].0,
            lane,
            pos,
            speed,
            accel: 0.0,
            length: self.vehicle_length,
            arrival: p.arrival,
            entry: t,
            free_flow_time,
            startup_timer: 0.0,
            last_lane_change: f64::NEG_INFINITY,
            committed: None,
            decision: decision.filter(|&(i, x)| i > 0 || x > pos),
            relaxed: p.confused && decision.is_some() && self.decision_at[p.route][0] != decision,
            travelled: 0.0,
            blocked: 0,
        }
    }

    fn insert_sorted(&mut self, v: Vehicle) {
        let slot = self.slot(v.link, v.lane);
        let idx = self.vehicles.len();
        let pos = v.pos;
        self.vehicles.push(v);
        let list = &self.lanes[slot];
        let at = list.partition_point(|&j| self.vehicles[j].pos >= pos);
        self.lanes[slot].insert(at, idx);
    }

    /// Advances the world by one step.
    pub fn step(&mut self) {
        let t = self.time();
        self.update_signals(t);
        self.compute_commands(t);
        self.apply_lane_changes(t);
        self.advance(t);
        self.step_index += 1;
        let now = self.time();
        self.rebuild_lanes();
        self.check_collisions(now);
        self.spawn(now);
        if let Some(every) = self.trajectory_every {
            if self.step_index % every == 0 && now >= self.warmup {
                self.sample(now);
            }
        }
    }

    /// Runs to the configured duration and returns the record.
    pub fn run(mut self) -> RunRecord {
        let steps = libm::round(self.duration / self.dt) as u64;
        while self.step_index < steps {
            self.step();
        }
        self.finish()
    }

    pub fn finish(mut self) -> RunRecord {
        self.record.counts = self.counts();
        self.record
    }

    fn update_signals(&mut self, t: f64) {
        for (i, s) in self.net.stop_lines.iter().enumerate() {
            let ind = self.net.controllers[s.controller].indication(s.phase, t);
            let onset = ind == Indication::Green && self.indications[i] != Indication::Green;
            self.indications[i] = ind;
            if !onset {
                continue;
            }
            let len = self.net.links[s.link.0].length;
            for &ln in &s.lanes {
                let slot = self.slot(s.link.0, ln);
                if let Some(&j) = self.lanes[slot].first() {
                    let lost = self.params(self.vehicles[j].class).startup_lost_time;
                    let v = &mut self.vehicles[j];
                    if v.speed < 0.5 && len - v.pos < QUEUE_HEAD_RANGE {
                        v.startup_timer = lost;
                    }
                }
            }
        }
    }

    /// Obstacles ahead of vehicle `vi` if it drove in `lane` of its current
    /// link, with `leader` the vehicle ahead on that lane of this link.
    fn scan(&self, vi: usize, lane: u8, leader: Option<usize>) -> Scan {
        let v = &self.vehicles[vi];
        let p = self.params(v.class);
        let v_des = self.desired_speed(v);
        let route = &self.net.routes[v.route].links;
        let plan = &self.plans[v.route];
        let mut accel = f64::INFINITY;
        let mut gap = f64::INFINITY;
        let mut commit = None;
        let mut found = false;
        let mut k = v.route_idx;
        let mut ln = lane;
        let mut offset = -v.pos;
        loop {
            let link = route[k].0;
            let len = self.net.links[link].length;
            let slot = self.slot(link, ln);
            if !found {
                let cand = if k == v.route_idx {
                    leader
                } else {
                    self.lanes[slot].last().copied()
                };
                if let Some(j) = cand {
                    let l = &self.vehicles[j];
                    found = true;
                    let g = offset + l.pos - l.length;
                    let a = if g > 0.0 {
                        longitudinal_accel(p, v_des, v.speed, Some(&LeaderContext::new(g, l.speed, l.accel)))
                    } else {
                        EMERGENCY_DECEL
                    };
                    gap = gap.min(g);
                    accel = accel.min(a);
                }
            }
            let end = offset + len;
            if end > LOOKAHEAD {
                break;
            }
            if let Some(s) = self.stop_at[slot] {
                let mut ind = self.indications[s];
                if v.committed == Some(link) && ind == Indication::Red {
                    // a vehicle that went for the yellow still stops if it
                    // has since slowed enough to do so comfortably
                    ind = Indication::Yellow;
                }
                if ind != Indication::Green {
                    if must_stop_for_signal(p, v.speed, end, ind) {
                        let a = longitudinal_accel(p, v_des, v.speed, Some(&LeaderContext::standing(end)));
                        accel = accel.min(a);
                        break;
                    } else if commit.is_none() && end > 0.0 {
                        commit = Some(link);
                    }
                }
            }
            if k + 1 == route.len() {
                break;
            }
            match plan.next_lane[k][ln as usize] {
                Some(next) => {
                    let ns = self.slot(route[k + 1].0, next);
                    if end <= MERGE_RANGE && self.feeders[ns].len() > 1 {
                        let (a, g) = self.merge_yield(vi, v_des, (link, ln), ns, end);
                        accel = accel.min(a);
                        gap = gap.min(g);
                    }
                    ln = next;
                }
                None => {
                    // lane ends: keep going until a comfortable stop short of
                    // the end becomes necessary, then brake at a constant rate
                    let room = end - p.min_gap;
                    if room <= 0.0 {
                        accel = accel.min(if v.speed > 0.0 { DEAD_END_DECEL } else { 0.0 });
                    } else {
                        let need = v.speed * v.speed / (2.0 * room);
                        if need >= p.b_comf {
                            accel = accel.min((-need).max(DEAD_END_DECEL));
                        }
                    }
                    break;
                }
            }
            if found {
                break;
            }
            offset = end;
            k += 1;
        }
        if accel == f64::INFINITY {
            accel = longitudinal_accel(p, v_des, v.speed, None);
        }
        if v.startup_timer > 0.0 {
            accel = accel.min(0.0);
        }
        Scan { accel, gap, commit }
    }

    /// Response to vehicles on other lanes feeding the lane `ns` entered at
    /// distance `end`. A vehicle that can no longer stop comfortably before
    /// the junction goes first; otherwise the closer one does, unless a signal
    /// holds it.
    fn merge_yield(&self, vi: usize, v_des: f64, from: (usize, u8), ns: usize, end: f64) -> (f64, f64) {
        let me = &self.vehicles[vi];
        let p = self.params(me.class);
        let speed = me.speed;
        let me_must_go = self.cannot_stop(me, end);
        let mut accel = f64::INFINITY;
        let mut gap = f64::INFINITY;
        for &(fl, fln) in &self.feeders[ns] {
            if (fl, fln) == from {
                continue;
            }
            let fs = self.slot(fl, fln);
            let Some(&j) = self.lanes[fs].first() else {
                continue;
            };
            let o = &self.vehicles[j];
            let d = self.net.links[fl].length - o.pos;
            if self.held_at_line(o, fs) {
                continue;
            }
            let o_must_go = self.cannot_stop(o, d);
            let first = if me_must_go != o_must_go { o_must_go } else { d < end };
            if !first {
                continue;
            }
            let route = &self.net.routes[o.route].links;
            let enters = o.route_idx + 1 < route.len()
                && self.plans[o.route].next_lane[o.route_idx][o.lane as usize]
                    .is_some_and(|nl| self.slot(route[o.route_idx + 1].0, nl) == ns);
            if !enters {
                continue;
            }
            let g = end - d - o.length;
            let a = if g > 0.0 {
                longitudinal_accel(p, v_des, speed, Some(&LeaderContext::new(g, o.speed, o.accel)))
            } else {
                EMERGENCY_DECEL
            };
            accel = accel.min(a);
            gap = gap.min(g);
        }
        (accel, gap)
    }

    fn cannot_stop(&self, v: &Vehicle, dist: f64) -> bool {
        dist > 0.0 && v.speed * v.speed > 2.0 * self.params(v.class).b_comf * dist
    }

    fn held_at_line(&self, o: &Vehicle, slot: usize) -> bool {
        match self.stop_at[slot] {
            Some(s) => self.indications[s] != Indication::Green && o.committed != Some(o.link),
            None => false,
        }
    }

    /// Whether a discretionary move of vehicle `vi` into `lane` keeps its route feasible.
    fn route_ok(&self, vi: usize, lane: u8) -> bool {
        let v = &self.vehicles[vi];
        let t = &self.plans[v.route].transfer[v.route_idx];
        let to = t[lane as usize];
        if v.decision.is_none() {
            to <= t[v.lane as usize]
        } else {
            to < UNREACHABLE
        }
    }

    fn candidate(&self, vi: usize, lane: u8) -> LaneCandidate {
        let v = &self.vehicles[vi];
        let slot = self.slot(v.link, lane);
        let list = &self.lanes[slot];
        let at = list.partition_point(|&j| self.vehicles[j].pos >= v.pos);
        let leader = at.checked_sub(1).map(|i| list[i]);
        let scan = self.scan(vi, lane, leader);
        let rear = v.pos - v.length;
        let mut follower: Option<(usize, f64)> = list.get(at).map(|&f| (f, rear - self.vehicles[f].pos));
        if follower.is_none() {
            for &(fl, fln) in &self.feeders[slot] {
                if let Some(&f) = self.lanes[self.slot(fl, fln)].first() {
                    let g = rear + self.net.links[fl].length - self.vehicles[f].pos;
                    if follower.is_none_or(|(_, best)| g < best) {
                        follower = Some((f, g));
                    }
                }
            }
        }
        let (gap_behind, follower_accel) = match follower {
            None => (f64::INFINITY, None),
            Some((_, g)) if g <= 0.0 => (g, Some(f64::NEG_INFINITY)),
            Some((f, g)) => {
                let fv = &self.vehicles[f];
                let a = longitudinal_accel(
                    self.params(fv.class),
                    self.desired_speed(fv),
                    fv.speed,
                    Some(&LeaderContext::new(g, v.speed, v.accel)),
                );
                (g, Some(a))
            }
        };
        LaneCandidate {
            own_accel: scan.accel,
            follower_accel,
            gap_ahead: scan.gap,
            gap_behind,
            route_ok: self.route_ok(vi, lane),
        }
    }

    fn lane_need(&self, vi: usize) -> LaneNeed {
        let v = &self.vehicles[vi];
        let plan = &self.plans[v.route];
        let target = if v.decision.is_none() {
            plan.toward_best(v.route_idx, v.lane)
        } else {
            plan.toward_feasible(v.route_idx, v.lane)
        };
        match target {
            None => LaneNeed::None,
            Some(l) => LaneNeed::Mandatory {
                toward: if l > v.lane { Side::Left } else { Side::Right },
                relaxed: v.relaxed && v.decision.is_none(),
            },
        }
    }

    /// Lane wish of vehicle `vi` given its current acceleration.
    fn lane_wish(&self, vi: usize, current: f64, t: f64, discretionary: bool) -> i8 {
        let v = &self.vehicles[vi];
        if t - v.last_lane_change < self.rules.cooldown {
            return 0;
        }
        let need = self.lane_need(vi);
        let n = self.net.links[v.link].lane_count;
        let (want_left, want_right) = match need {
            LaneNeed::Mandatory { toward: Side::Left, .. } => (true, false),
            LaneNeed::Mandatory { toward: Side::Right, .. } => (false, true),
            LaneNeed::None if discretionary => (true, true),
            LaneNeed::None => return 0,
        };
        let left = (want_left && v.lane + 1 < n).then(|| self.candidate(vi, v.lane + 1));
        let right = (want_right && v.lane > 0).then(|| self.candidate(vi, v.lane - 1));
        match lane_change_decision(need, current, left.as_ref(), right.as_ref(), &self.rules) {
            LaneChange::Keep => 0,
            LaneChange::Left => 1,
            LaneChange::Right => -1,
        }
    }

    fn compute_commands(&mut self, t: f64) {
        let mut commands = core::mem::take(&mut self.commands);
        commands.clear();
        commands.resize(self.vehicles.len(), Command::default());
        for list in &self.lanes {
            for (at, &vi) in list.iter().enumerate() {
                let leader = at.checked_sub(1).map(|i| list[i]);
                let scan = self.scan(vi, self.vehicles[vi].lane, leader);
                let discretionary = (self.step_index + self.vehicles[vi].id) % DISCRETIONARY_EVERY == 0;
                let change = self.lane_wish(vi, scan.accel, t, discretionary);
                let blocked = match self.lane_need(vi) {
                    LaneNeed::Mandatory { toward, .. } if change == 0 && self.near_dead_end(vi) => {
                        if toward == Side::Left { 1 } else { -1 }
                    }
                    _ => 0,
                };
                let (yield_accel, away) = self.courtesy(vi);
                let mut accel = scan.accel.min(yield_accel);
                if blocked != 0 {
                    accel = accel.min(self.synchronize(vi, blocked));
                }
                let cooperative = change == 0 && away != 0 && self.cooperative_ok(vi, away, t);
                commands[vi] = Command {
                    accel,
                    change: if cooperative { away } else { change },
                    cooperative,
                    commit: scan.commit,
                    blocked,
                };
            }
        }
        for (v, c) in self.vehicles.iter_mut().zip(&commands) {
            v.blocked = c.blocked;
        }
        self.commands = commands;
    }

    fn near_dead_end(&self, vi: usize) -> bool {
        let v = &self.vehicles[vi];
        let route = &self.net.routes[v.route].links;
        let ends = v.route_idx + 1 == route.len() || self.plans[v.route].next_lane[v.route_idx][v.lane as usize].is_none();
        ends && self.net.links[v.link].length - v.pos <= COURTESY_RANGE
    }

    /// Slowdown that lets in the nearest vehicle ahead on an adjacent lane
    /// whose mandatory change toward this lane is blocked, if that is
    /// possible at comfortable deceleration.
    /// Also returns the side the blocked vehicle wants to move to, which is
    /// where this vehicle can get out of its way.
    fn courtesy(&self, vi: usize) -> (f64, i8) {
        let v = &self.vehicles[vi];
        let p = self.params(v.class);
        let n = self.net.links[v.link].lane_count;
        let mut accel = f64::INFINITY;
        let mut away = 0;
        for side in [-1i8, 1] {
            let lane = v.lane as i16 - side as i16;
            if lane < 0 || lane >= n as i16 {
                continue;
            }
            let list = &self.lanes[self.slot(v.link, lane as u8)];
            let at = list.partition_point(|&j| self.vehicles[j].pos > v.pos);
            let Some(&m) = list[..at]
                .iter()
                .rev()
                .take_while(|&&j| self.vehicles[j].pos - v.pos <= COURTESY_RANGE + v.length)
                .find(|&&j| self.vehicles[j].blocked == side)
            else {
                continue;
            };
            let o = &self.vehicles[m];
            let gap = o.pos - o.length - v.pos;
            if gap <= 0.0 || gap > COURTESY_RANGE {
                continue;
            }
            away = side;
            let a = longitudinal_accel(p, self.desired_speed(v), v.speed, Some(&LeaderContext::new(gap, o.speed, o.accel)));
            if a >= -p.b_comf {
                accel = accel.min(a);
            }
        }
        (accel, away)
    }

    /// Whether vehicle `vi` may move one lane toward `side` to let a blocked
    /// vehicle in.
    fn cooperative_ok(&self, vi: usize, side: i8, t: f64) -> bool {
        let v = &self.vehicles[vi];
        if t - v.last_lane_change < self.rules.cooldown || self.lane_need(vi) != LaneNeed::None {
            return false;
        }
        let lane = v.lane as i16 + side as i16;
        if lane < 0 || lane >= self.net.links[v.link].lane_count as i16 {
            return false;
        }
        let c = self.candidate(vi, lane as u8);
        c.route_ok && c.safe(self.rules.safe_decel)
    }

    /// Speed matching of a blocked merger with the nearest vehicle ahead on
    /// the target lane, so it falls in behind it. Braking is held to the
    /// comfortable rate; the lane end still stops it.
    fn synchronize(&self, vi: usize, side: i8) -> f64 {
        let v = &self.vehicles[vi];
        let lane = v.lane as i16 + side as i16;
        if lane < 0 || lane >= self.net.links[v.link].lane_count as i16 {
            return f64::INFINITY;
        }
        let p = self.params(v.class);
        let list = &self.lanes[self.slot(v.link, lane as u8)];
        let at = list.partition_point(|&j| self.vehicles[j].pos > v.pos);
        let Some(&l) = at.checked_sub(1).map(|i| &list[i]) else {
            return f64::INFINITY;
        };
        let o = &self.vehicles[l];
        let gap = o.pos - o.length - v.pos;
        if gap <= 0.0 {
            return f64::INFINITY;
        }
        let a = longitudinal_accel(p, self.desired_speed(v), v.speed, Some(&LeaderContext::new(gap, o.speed, o.accel)));
        a.max(-p.b_comf)
    }

    fn apply_lane_changes(&mut self, t: f64) {
        for vi in 0..self.vehicles.len() {
            let change = self.commands[vi].change;
            if change == 0 {
                continue;
            }
            let v = &self.vehicles[vi];
            let target = (v.lane as i16 + change as i16) as u8;
            // re-check against changes already made this step
            let cand = self.candidate(vi, target);
            let need = self.lane_need(vi);
            let (l, r) = if change > 0 { (Some(&cand), None) } else { (None, Some(&cand)) };
            let ok = if self.commands[vi].cooperative {
                cand.route_ok && cand.safe(self.rules.safe_decel)
            } else {
                lane_change_decision(need, self.commands[vi].accel, l, r, &self.rules) != LaneChange::Keep
            };
            if !ok {
                continue;
            }
            let old = self.slot(v.link, v.lane);
            let new = self.slot(v.link, target);
            let pos = v.pos;
            self.lanes[old].retain(|&j| j != vi);
            let at = self.lanes[new].partition_point(|&j| self.vehicles[j].pos >= pos);
            self.lanes[new].insert(at, vi);
            let v = &mut self.vehicles[vi];
            v.lane = target;
            v.last_lane_change = t;
            self.commands[vi].accel = cand.own_accel;
            if let Some(&f) = self.lanes[new].get(at + 1) {
                let a = self.scan(f, self.vehicles[f].lane, Some(vi)).accel;
                self.commands[f].accel = self.commands[f].accel.min(a);
            }
        }
    }

    fn advance(&mut self, t: f64) {
        let dt = self.dt;
        let mut i = 0;
        while i < self.vehicles.len() {
            let cmd = self.commands[i];
            let cap = self.speed_cap(&self.vehicles[i]);
            let v = &mut self.vehicles[i];
            let a = cmd.accel;
            let (v1, disp) = ballistic(v.speed, a, dt);
            v.speed = v1;
            v.accel = a;
            v.startup_timer = (v.startup_timer - dt).max(0.0);
            if cmd.commit.is_some() && v.committed.is_none() {
                v.committed = cmd.commit;
            }
            let ratio = v.speed / cap;
            if ratio > self.record.max_speed_ratio {
                self.record.max_speed_ratio = ratio;
            }
            if self.move_vehicle(i, disp, t) {
                self.vehicles.remove(i);
                self.commands.remove(i);
            } else {
                i += 1;
            }
        }
    }

    /// Moves vehicle `i` by `disp`; returns true when it left the network.
    fn move_vehicle(&mut self, i: usize, disp: f64, t: f64) -> bool {
        let dt = self.dt;
        let mut done = 0.0;
        loop {
            let (link, lane, pos) = {
                let v = &self.vehicles[i];
                (v.link, v.lane, v.pos)
            };
            let len = self.net.links[link].length;
            let target = pos + (disp - done);
            let reach = target.min(len);
            for k in 0..self.link_detectors[link].len() {
                let d = self.link_detectors[link][k];
                let det = &self.net.detectors[d];
                if pos < det.position && reach >= det.position && det.lanes.contains(&lane) {
                    let frac = if disp > 0.0 { (done + det.position - pos) / disp } else { 1.0 };
                    let v = &self.vehicles[i];
                    let speed = (v.speed - (1.0 - frac) * v.accel * dt).max(1e-3);
                    self.detect(d, t + frac * dt, speed);
                }
            }
            if target < len || disp - done <= 0.0 {
                self.vehicles[i].pos = reach;
                self.pass_decision(i);
                return false;
            }
            done += len - pos;
            let v = &self.vehicles[i];
            let route = &self.net.routes[v.route].links;
            if v.route_idx + 1 == route.len() {
                let frac = if disp > 0.0 { done / disp } else { 1.0 };
                self.complete(i, t + frac * dt);
                return true;
            }
            match self.plans[v.route].next_lane[v.route_idx][lane as usize] {
                None => {
                    let id = v.id;
                    let v = &mut self.vehicles[i];
                    v.pos = len;
                    v.speed = 0.0;
                    self.record.events.push(Event {
                        t: t + dt,
                        vehicle: id,
                        kind: EventKind::DeadEnd { link },
                    });
                    return false;
                }
                Some(next) => {
                    let next_link = route[v.route_idx + 1].0;
                    let v = &mut self.vehicles[i];
                    v.route_idx += 1;
                    v.link = next_link;
                    v.lane = next;
                    v.pos = 0.0;
                    v.travelled += len;
                    if v.committed == Some(link) {
                        v.committed = None;
                    }
                }
            }
        }
    }

    fn pass_decision(&mut self, i: usize) {
        let v = &mut self.vehicles[i];
        if let Some((idx, at)) = v.decision {
            if v.route_idx > idx || (v.route_idx == idx && v.pos >= at) {
                v.decision = None;
            }
        }
    }

    fn detect(&mut self, d: usize, t: f64, speed: f64) {
        let Some(b) = self.record.bin_of(t) else {
            return;
        };
        let nb = self.record.bin_count();
        let bin = &mut self.record.detector_bins[d * nb + b];
        bin.count += 1;
        bin.inverse_speed_sum += 1.0 / speed;
    }

    fn complete(&mut self, i: usize, exit: f64) {
        self.record.counts.completed += 1;
        if exit < self.warmup || exit > self.duration {
            return;
        }
        let v = &self.vehicles[i];
        let travel = exit - v.entry;
        self.record.trips.push(TripRecord {
            vehicle: v.id,
            origin: v.origin,
            route: v.route,
            class: v.class,
            confused: v.confused,
            arrival: v.arrival,
            entry: v.entry,
            exit,
            free_flow_time: v.free_flow_time,
            delay: (travel - v.free_flow_time).max(0.0),
        });
    }

    fn rebuild_lanes(&mut self) {
        for l in &mut self.lanes {
            l.clear();
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            let s = self.lane_base[v.link] + v.lane as usize;
            self.lanes[s].push(i);
        }
        let vehicles = &self.vehicles;
        for l in &mut self.lanes {
            if l.len() > 1 {
                l.sort_by(|&a, &b| vehicles[b].pos.total_cmp(&vehicles[a].pos));
            }
        }
    }

    fn collide(&mut self, leader: usize, follower: usize, now: f64) {
        let (lid, fid) = (self.vehicles[leader].id, self.vehicles[follower].id);
        self.record.events.push(Event {
            t: now,
            vehicle: fid,
            kind: EventKind::Collision {
                leader: lid,
                follower: fid,
                link: self.vehicles[follower].link,
            },
        });
        let f = &mut self.vehicles[follower];
        f.speed = 0.0;
        f.accel = EMERGENCY_DECEL;
    }

    fn check_collisions(&mut self, now: f64) {
        for s in 0..self.lanes.len() {
            for k in 1..self.lanes[s].len() {
                let (a, b) = (self.lanes[s][k - 1], self.lanes[s][k]);
                let gap = self.vehicles[a].pos - self.vehicles[a].length - self.vehicles[b].pos;
                if gap <= 0.0 {
                    self.collide(a, b, now);
                    self.vehicles[b].pos = self.vehicles[a].pos - self.vehicles[a].length - 0.01;
                }
            }
        }
    }

    fn spawn(&mut self, now: f64) {
        for o in 0..self.origins.len() {
            let (mpr, share) = (self.mpr, self.confusion_share);
            let st = &mut self.origins[o];
            while let Some(arrival) = st.arrivals.pop_until(now) {
                let class = assign_class(&mut st.class, mpr);
                let confused = assign_confusion(&mut st.confusion, share, class);
                let route = st.routes[choose_route(&mut st.route, &st.shares)];
                st.pending.push_back(Pending {
                    id: self.next_id,
                    arrival,
                    class,
                    confused,
                    route,
                });
                self.next_id += 1;
                self.record.counts.generated += 1;
            }
            // Each pending vehicle waits for its own entry lanes; it holds
            // back later vehicles only on those lanes.
            let lanes = self.net.links[self.net.origins[o].link.0].lane_count as u32;
            let all = (1u32 << lanes) - 1;
            let mut blocked = 0u32;
            let mut k = 0;
            while k < self.origins[o].pending.len() && blocked != all {
                let p = self.origins[o].pending[k];
                let Some((lane, speed)) = self.entry_slot(p, blocked) else {
                    blocked |= self.entry_lanes(p);
                    k += 1;
                    continue;
                };
                self.origins[o].pending.remove(k);
                let waited = now - p.arrival;
                if waited > self.dt + 1e-9 {
                    self.record.events.push(Event {
                        t: now,
                        vehicle: p.id,
                        kind: EventKind::SpawnDeferred { origin: o, waited },
                    });
                }
                let v = self.make_vehicle(p, lane, 0.0, speed, now);
                self.insert_sorted(v);
            }
        }
    }

    /// Bit set of the entry lanes a pending vehicle may use.
    fn entry_lanes(&self, p: Pending) -> u32 {
        let cost = &self.plans[p.route].cost[0];
        let best = cost.iter().copied().min().unwrap_or(UNREACHABLE);
        cost.iter()
            .enumerate()
            .filter(|&(_, &c)| c == best)
            .fold(0, |m, (l, _)| m | 1 << l)
    }

    /// Entry lane and speed for a pending vehicle, if there is room.
    fn entry_slot(&self, p: Pending, blocked: u32) -> Option<(u8, f64)> {
        let params = self.params(p.class);
        let link = self.net.routes[p.route].links[0].0;
        let allowed = self.entry_lanes(p) & !blocked;
        let mut choice: Option<(u8, f64, f64)> = None;
        for lane in 0..self.net.links[link].lane_count as usize {
            if allowed & (1 << lane) == 0 {
                continue;
            }
            let (gap, v_lead) = match self.lanes[self.slot(link, lane as u8)].last() {
                Some(&r) => {
                    let r = &self.vehicles[r];
                    (r.pos - r.length, r.speed)
                }
                None => (f64::INFINITY, 0.0),
            };
            if choice.is_none_or(|(_, g, _)| gap > g) {
                choice = Some((lane as u8, gap, v_lead));
            }
        }
        let (lane, gap, v_lead) = choice?;
        let v_des = params.desired_speed.min(self.net.links[link].speed_limit);
        // wait for the equilibrium gap at the leader's speed so entries never
        // start slower than the traffic they join
        if gap < params.min_gap + 0.5 || gap < params.min_gap + params.time_gap * v_lead.min(v_des) {
            return None;
        }
        let room = gap - params.min_gap;
        let speed = v_des
            .min(room / params.time_gap)
            .min(libm::sqrt(v_lead * v_lead + 2.0 * params.b_comf * room));
        Some((lane, speed))
    }

    fn sample(&mut self, now: f64) {
        for v in &self.vehicles {
            self.record.trajectories.push(TrajectorySample {
                vehicle: v.id,
                t: now,
                link: v.link,
                lane: v.lane,
                position: v.pos,
                route_distance: v.travelled + v.pos,
                speed: v.speed,
                confused: v.confused,
            });
        }
    }
}
