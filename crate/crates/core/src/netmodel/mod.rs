//! Road networks: links with lanes, lane-level connectors, routes with
//! demand shares, signal stop lines, detectors, decision points and
//! confusion zones. Networks are immutable once built.

mod builders;

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::control::SignalController;
use crate::error::{Error, Result};

pub use builders::{build, build_cdi, build_ddi, build_rcut};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum NetworkKind {
    Cdi,
    Ddi,
    Rcut,
}

impl NetworkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NetworkKind::Cdi => "cdi",
            NetworkKind::Ddi => "ddi",
            NetworkKind::Rcut => "rcut",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RouteId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Movement {
    Through,
    Left,
    Right,
    UTurn,
    /// Arterial traffic switching to the opposite side of the road.
    Crossover,
}

/// Side of the roadway traffic drives on, seen in its direction of travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DriveSide {
    Right,
    Left,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connector {
    pub to: LinkId,
    /// `(from_lane, to_lane)` pairs; lane 0 is the curb lane.
    pub lanes: Vec<(u8, u8)>,
    pub movement: Movement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: LinkId,
    pub name: String,
    pub length: f64,
    pub lane_count: u8,
    pub speed_limit: f64,
    pub side: DriveSide,
    pub connectors: Vec<Connector>,
}

impl Link {
    pub fn connector_to(&self, to: LinkId) -> Option<&Connector> {
        self.connectors.iter().find(|c| c.to == to)
    }

    pub fn is_exit(&self) -> bool {
        self.connectors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub id: RouteId,
    pub name: String,
    pub origin: usize,
    pub links: Vec<LinkId>,
    /// Share of its origin's demand.
    pub share: f64,
    /// Movement whose decision points govern lane choice on this route.
    pub movement: Movement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Origin {
    pub name: String,
    pub link: LinkId,
    pub vph: f64,
    pub routes: Vec<RouteId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detector {
    pub name: String,
    pub link: LinkId,
    pub position: f64,
    /// Aggregation window, s.
    pub window: f64,
    pub lanes: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecisionVariant {
    Normal,
    /// Used by confused drivers only.
    Late,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionPoint {
    pub link: LinkId,
    pub position: f64,
    pub movement: Movement,
    pub variant: DecisionVariant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopLine {
    pub link: LinkId,
    pub lanes: Vec<u8>,
    pub position: f64,
    pub controller: usize,
    pub phase: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionZone {
    pub link: LinkId,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    pub kind: NetworkKind,
    pub links: Vec<Link>,
    pub routes: Vec<Route>,
    pub origins: Vec<Origin>,
    pub detectors: Vec<Detector>,
    pub decision_points: Vec<DecisionPoint>,
    pub stop_lines: Vec<StopLine>,
    pub confusion_zones: Vec<ConfusionZone>,
    pub controllers: Vec<SignalController>,
}

impl RoadNetwork {
    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    pub fn route(&self, id: RouteId) -> &Route {
        &self.routes[id.0]
    }

    pub fn link_by_name(&self, name: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.name == name)
    }

    pub fn detector(&self, name: &str) -> Option<&Detector> {
        self.detectors.iter().find(|d| d.name == name)
    }

    pub fn route_length(&self, id: RouteId) -> f64 {
        self.route(id).links.iter().map(|&l| self.link(l).length).sum()
    }

    /// Links without outgoing connectors.
    pub fn exits(&self) -> Vec<LinkId> {
        self.links.iter().filter(|l| l.is_exit()).map(|l| l.id).collect()
    }

    /// Exit links reachable from `from` over any connectors.
    pub fn reachable_exits(&self, from: LinkId) -> Vec<LinkId> {
        let mut seen = vec![false; self.links.len()];
        let mut queue = VecDeque::from([from]);
        seen[from.0] = true;
        let mut exits = Vec::new();
        while let Some(id) = queue.pop_front() {
            let link = self.link(id);
            if link.is_exit() {
                exits.push(id);
            }
            for c in &link.connectors {
                if !seen[c.to.0] {
                    seen[c.to.0] = true;
                    queue.push_back(c.to);
                }
            }
        }
        exits.sort();
        exits
    }

    /// Distance from the route start to `position` on the `idx`-th link.
    pub fn route_offset(&self, route: RouteId, idx: usize, position: f64) -> f64 {
        let r = self.route(route);
        r.links[..idx].iter().map(|&l| self.link(l).length).sum::<f64>() + position
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Network(m));
        for (i, l) in self.links.iter().enumerate() {
            if l.id.0 != i {
                return err(format!("link {} has id {} at index {i}", l.name, l.id.0));
            }
            if !(l.length > 0.0 && l.length.is_finite()) {
                return err(format!("link {} has nonpositive length", l.name));
            }
            if l.lane_count == 0 {
                return err(format!("link {} has no lanes", l.name));
            }
            if !(l.speed_limit > 0.0 && l.speed_limit.is_finite()) {
                return err(format!("link {} has nonpositive speed limit", l.name));
            }
            for c in &l.connectors {
                let Some(to) = self.links.get(c.to.0) else {
                    return err(format!("connector from {} dangles", l.name));
                };
                if c.lanes.is_empty() {
                    return err(format!("connector {} -> {} maps no lanes", l.name, to.name));
                }
                for &(a, b) in &c.lanes {
                    if a >= l.lane_count || b >= to.lane_count {
                        return err(format!("connector {} -> {} maps invalid lane {a}->{b}", l.name, to.name));
                    }
                }
            }
        }
        for (i, r) in self.routes.iter().enumerate() {
            if r.id.0 != i || r.links.is_empty() {
                return err(format!("route {} is malformed", r.name));
            }
            for w in r.links.windows(2) {
                if self.link(w[0]).connector_to(w[1]).is_none() {
                    return err(format!(
                        "route {}: {} does not connect to {}",
                        r.name,
                        self.link(w[0]).name,
                        self.link(w[1]).name
                    ));
                }
            }
            if !self.link(*r.links.last().unwrap()).is_exit() {
                return err(format!("route {} does not end at an exit", r.name));
            }
            if r.origin >= self.origins.len() || self.origins[r.origin].link != r.links[0] {
                return err(format!("route {} does not start at its origin", r.name));
            }
        }
        for o in &self.origins {
            if !(o.vph >= 0.0 && o.vph.is_finite()) {
                return err(format!("origin {} has invalid demand", o.name));
            }
            let total: f64 = o.routes.iter().map(|&r| self.route(r).share).sum();
            if (total - 1.0).abs() > 1e-9 {
                return err(format!("route shares at origin {} sum to {total}", o.name));
            }
        }
        for d in &self.detectors {
            let l = self.link(d.link);
            if !(d.position >= 0.0 && d.position <= l.length) || !(d.window > 0.0) {
                return err(format!("detector {} is out of range", d.name));
            }
            if d.lanes.is_empty() || d.lanes.iter().any(|&x| x >= l.lane_count) {
                return err(format!("detector {} covers invalid lanes", d.name));
            }
        }
        for s in &self.stop_lines {
            let l = self.link(s.link);
            let Some(ctrl) = self.controllers.get(s.controller) else {
                return err(format!("stop line on {} references a missing controller", l.name));
            };
            if s.phase >= ctrl.phases.len() {
                return err(format!("stop line on {} references a missing phase", l.name));
            }
            if s.lanes.iter().any(|&x| x >= l.lane_count) {
                return err(format!("stop line on {} covers invalid lanes", l.name));
            }
        }
        // one stop line per controlled lane
        for (i, a) in self.stop_lines.iter().enumerate() {
            for b in &self.stop_lines[i + 1..] {
                if a.link == b.link && a.lanes.iter().any(|x| b.lanes.contains(x)) {
                    return err(format!("lane on {} has two stop lines", self.link(a.link).name));
                }
            }
        }
        for c in &self.controllers {
            c.validate()?;
        }
        for z in &self.confusion_zones {
            let l = self.link(z.link);
            if !(z.start >= 0.0 && z.start < z.end && z.end <= l.length + 1e-9) {
                return err(format!("confusion zone on {} is out of range", l.name));
            }
        }
        self.validate_decision_points()
    }

    fn validate_decision_points(&self) -> Result<()> {
        for late in self.decision_points.iter().filter(|d| d.variant == DecisionVariant::Late) {
            for normal in self
                .decision_points
                .iter()
                .filter(|d| d.variant == DecisionVariant::Normal && d.movement == late.movement)
            {
                for r in self.routes.iter().filter(|r| r.movement == late.movement) {
                    let at = |dp: &DecisionPoint| {
                        r.links
                            .iter()
                            .position(|&l| l == dp.link)
                            .map(|i| self.route_offset(r.id, i, dp.position))
                    };
                    if let (Some(n), Some(l)) = (at(normal), at(late)) {
                        if l <= n {
                            return Err(Error::Network(format!(
                                "late decision point on route {} is not downstream of the normal one",
                                r.name
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
