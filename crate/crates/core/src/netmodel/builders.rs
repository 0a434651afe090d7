//! Builders for the built-in networks.
//!
//! Interchange layout (eastbound shown; westbound mirrors it). Lane 0 is the
//! curb lane of the direction of travel.
//!
//! ```text
//!  eb_approach -> eb_west_stop =W=> eb_between.. -> eb_east_stop =E=> eb_departure -> eb_exit
//!      \ sb_onramp_right       (CDI: eb_between, DDI: eb_merge)  \ nb_onramp_left
//! ```
//!
//! The CDI stores eastbound left turns in a bay (extra lane) on
//! `eb_east_stop`, released by the terminal's left-to-ramp phase. The DDI
//! carries eastbound traffic on the left side between the crossovers, and
//! left turns to and from the ramps run free there. Off-ramp traffic joining
//! a road without a signal enters on an added lane that ends, so it has to
//! find a gap.

use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::config::ScenarioConfig;
use crate::control::{three_phase_terminal, two_phase_crossover};
use crate::units::{feet_to_m, miles_to_m};

struct NetBuilder {
    kind: NetworkKind,
    speed: f64,
    window: f64,
    links: Vec<Link>,
    routes: Vec<Route>,
    origins: Vec<Origin>,
    detectors: Vec<Detector>,
    decision_points: Vec<DecisionPoint>,
    stop_lines: Vec<StopLine>,
    zones: Vec<ConfusionZone>,
}

impl NetBuilder {
    fn new(kind: NetworkKind, cfg: &ScenarioConfig) -> Self {
        NetBuilder {
            kind,
            speed: cfg.speed_limit(),
            window: cfg.run.detector_window,
            links: Vec::new(),
            routes: Vec::new(),
            origins: Vec::new(),
            detectors: Vec::new(),
            decision_points: Vec::new(),
            stop_lines: Vec::new(),
            zones: Vec::new(),
        }
    }

    fn link(&mut self, name: &str, length: f64, lanes: u8, side: DriveSide) -> LinkId {
        let id = LinkId(self.links.len());
        self.links.push(Link {
            id,
            name: name.into(),
            length,
            lane_count: lanes,
            speed_limit: self.speed,
            side,
            connectors: Vec::new(),
        });
        id
    }

    fn connect(&mut self, from: LinkId, to: LinkId, lanes: Vec<(u8, u8)>, movement: Movement) {
        self.links[from.0].connectors.push(Connector { to, lanes, movement });
    }

    /// Lane `i` continues as lane `i + shift` for every lane of the narrower link.
    fn straight(&mut self, from: LinkId, to: LinkId, lanes: u8, from_base: u8, to_base: u8, movement: Movement) {
        let pairs = (0..lanes).map(|i| (from_base + i, to_base + i)).collect();
        self.connect(from, to, pairs, movement);
    }

    fn origin(&mut self, name: &str, link: LinkId, vph: f64) -> usize {
        self.origins.push(Origin {
            name: name.into(),
            link,
            vph,
            routes: Vec::new(),
        });
        self.origins.len() - 1
    }

    fn route(&mut self, origin: usize, name: &str, links: &[LinkId], share: f64, movement: Movement) {
        let id = RouteId(self.routes.len());
        self.routes.push(Route {
            id,
            name: name.into(),
            origin,
            links: links.to_vec(),
            share,
            movement,
        });
        self.origins[origin].routes.push(id);
    }

    fn stop(&mut self, link: LinkId, lanes: Vec<u8>, controller: usize, phase: usize) {
        let position = self.links[link.0].length;
        self.stop_lines.push(StopLine {
            link,
            lanes,
            position,
            controller,
            phase,
        });
    }

    fn detector(&mut self, name: &str, link: LinkId, position: f64, lanes: u8) {
        self.detectors.push(Detector {
            name: name.into(),
            link,
            position,
            window: self.window,
            lanes: (0..lanes).collect(),
        });
    }

    /// Zone covering the last `length` metres before the end of `link`,
    /// spilling onto `upstream` when the link is shorter.
    fn zone_before_end(&mut self, link: LinkId, upstream: Option<LinkId>, length: f64) {
        if length <= 0.0 {
            return;
        }
        let l = self.links[link.0].length;
        self.zones.push(ConfusionZone {
            link,
            start: (l - length).max(0.0),
            end: l,
        });
        if length > l {
            if let Some(u) = upstream {
                let ul = self.links[u.0].length;
                self.zones.push(ConfusionZone {
                    link: u,
                    start: (ul - (length - l)).max(0.0),
                    end: ul,
                });
            }
        }
    }

    fn finish(self, controllers: Vec<crate::control::SignalController>) -> Result<RoadNetwork> {
        let net = RoadNetwork {
            kind: self.kind,
            links: self.links,
            routes: self.routes,
            origins: self.origins,
            detectors: self.detectors,
            decision_points: self.decision_points,
            stop_lines: self.stop_lines,
            confusion_zones: self.zones,
            controllers,
        };
        net.validate()?;
        Ok(net)
    }
}

fn check(cfg: &ScenarioConfig, kind: NetworkKind) -> Result<()> {
    cfg.validate()?;
    if cfg.network.kind != kind {
        return Err(Error::Network(alloc::format!(
            "config describes a {} network, not {}",
            cfg.network.kind.as_str(),
            kind.as_str()
        )));
    }
    Ok(())
}

/// Builds whichever network the config names.
pub fn build(cfg: &ScenarioConfig) -> Result<RoadNetwork> {
    match cfg.network.kind {
        NetworkKind::Cdi => build_cdi(cfg),
        NetworkKind::Ddi => build_ddi(cfg),
        NetworkKind::Rcut => build_rcut(cfg),
    }
}

/// Links shared by both interchange layouts, for one arterial direction.
struct Direction {
    approach: LinkId,
    stop_in: LinkId,
    between: LinkId,
    stop_out: LinkId,
    departure: LinkId,
    exit: LinkId,
}

fn shares(cfg: &ScenarioConfig) -> (f64, f64, f64) {
    let d = &cfg.demand;
    (1.0 - d.major_right_share - d.major_left_share, d.major_right_share, d.major_left_share)
}

/// Conventional diamond: two three-phase terminals, left-turn bays.
pub fn build_cdi(cfg: &ScenarioConfig) -> Result<RoadNetwork> {
    check(cfg, NetworkKind::Cdi)?;
    let n = cfg.network.lanes;
    let g = &cfg.network;
    let mut b = NetBuilder::new(NetworkKind::Cdi, cfg);
    let side = DriveSide::Right;

    let dir = |b: &mut NetBuilder, p: &str| Direction {
        approach: b.link(&[p, "_approach"].concat(), g.approach_length - g.storage_length, n, side),
        stop_in: b.link(&[p, "_in_stop"].concat(), g.storage_length, n, side),
        between: b.link(&[p, "_between"].concat(), g.terminal_spacing - g.storage_length, n, side),
        stop_out: b.link(&[p, "_out_stop"].concat(), g.storage_length, n + 1, side),
        departure: b.link(&[p, "_departure"].concat(), g.departure_length / 2.0, n + 1, side),
        exit: b.link(&[p, "_exit"].concat(), g.departure_length / 2.0, n, side),
    };
    let eb = dir(&mut b, "eb");
    let wb = dir(&mut b, "wb");
    // west terminal ramps: SB off arrives from the north, SB on leaves south
    let sb_off = b.link("sb_offramp", g.ramp_length, 2, side);
    let sb_on_r = b.link("sb_onramp_right", g.ramp_length / 2.0, 1, side);
    let sb_on_l = b.link("sb_onramp_left", g.ramp_length / 2.0, 1, side);
    let nb_off = b.link("nb_offramp", g.ramp_length, 2, side);
    let nb_on_r = b.link("nb_onramp_right", g.ramp_length / 2.0, 1, side);
    let nb_on_l = b.link("nb_onramp_left", g.ramp_length / 2.0, 1, side);

    let s = &cfg.signals;
    let controllers = vec![
        three_phase_terminal("west_terminal", s.cycle, s.terminal_greens, s.terminal_clearance, s.yellow, s.offsets[0]),
        three_phase_terminal("east_terminal", s.cycle, s.terminal_greens, s.terminal_clearance, s.yellow, s.offsets[1]),
    ];
    let (west, east) = (0usize, 1usize);
    let (through, left_to, left_from) = (0usize, 1usize, 2usize);

    // (direction, entry terminal, exit terminal, right-turn on-ramp, left-turn on-ramp,
    //  off-ramp joining between the terminals, off-ramp joining the departure)
    for (d, t_in, t_out, on_r, on_l, off_left, off_right) in [
        (&eb, west, east, sb_on_r, nb_on_l, sb_off, nb_off),
        (&wb, east, west, nb_on_r, sb_on_l, nb_off, sb_off),
    ] {
        b.straight(d.approach, d.stop_in, n, 0, 0, Movement::Through);
        b.connect(d.approach, on_r, vec![(0, 0)], Movement::Right);
        b.straight(d.stop_in, d.between, n, 0, 0, Movement::Through);
        b.stop(d.stop_in, (0..n).collect(), t_in, through);
        let mut pairs: Vec<(u8, u8)> = (0..n).map(|i| (i, i)).collect();
        pairs.push((n - 1, n));
        b.connect(d.between, d.stop_out, pairs, Movement::Through);
        b.connect(off_left, d.between, vec![(1, 0)], Movement::Left);
        b.stop(off_left, vec![1], t_in, left_from);
        b.stop(d.stop_out, (0..n).collect(), t_out, through);
        b.stop(d.stop_out, vec![n], t_out, left_to);
        b.straight(d.stop_out, d.departure, n, 0, 1, Movement::Through);
        b.connect(d.stop_out, on_l, vec![(n, 0)], Movement::Left);
        b.connect(off_right, d.departure, vec![(0, 0)], Movement::Right);
        if s.signalized_ramp_rights {
            // joins the departure while the cross street's left turns are held
            b.stop(off_right, vec![0], t_out, through);
        }
        b.straight(d.departure, d.exit, n, 1, 0, Movement::Through);
    }

    interchange_demand(&mut b, cfg, &eb, &wb, [sb_off, nb_off], [sb_on_r, nb_on_r], [nb_on_l, sb_on_l]);
    b.finish(controllers)
}

/// Diverging diamond: two two-phase crossovers, free left turns between them.
pub fn build_ddi(cfg: &ScenarioConfig) -> Result<RoadNetwork> {
    check(cfg, NetworkKind::Ddi)?;
    let n = cfg.network.lanes;
    let g = &cfg.network;
    let mut b = NetBuilder::new(NetworkKind::Ddi, cfg);

    let dir = |b: &mut NetBuilder, p: &str| Direction {
        approach: b.link(&[p, "_approach"].concat(), g.approach_length - g.storage_length, n, DriveSide::Right),
        stop_in: b.link(&[p, "_in_stop"].concat(), g.storage_length, n, DriveSide::Right),
        between: b.link(&[p, "_merge"].concat(), g.terminal_spacing - g.storage_length, n + 1, DriveSide::Left),
        stop_out: b.link(&[p, "_out_stop"].concat(), g.storage_length, n, DriveSide::Left),
        departure: b.link(&[p, "_departure"].concat(), g.departure_length / 2.0, n + 1, DriveSide::Right),
        exit: b.link(&[p, "_exit"].concat(), g.departure_length / 2.0, n, DriveSide::Right),
    };
    let eb = dir(&mut b, "eb");
    let wb = dir(&mut b, "wb");
    let side = DriveSide::Right;
    let sb_off = b.link("sb_offramp", g.ramp_length, 2, side);
    let sb_on_r = b.link("sb_onramp_right", g.ramp_length / 2.0, 1, side);
    let sb_on_l = b.link("sb_onramp_left", g.ramp_length / 2.0, 1, side);
    let nb_off = b.link("nb_offramp", g.ramp_length, 2, side);
    let nb_on_r = b.link("nb_onramp_right", g.ramp_length / 2.0, 1, side);
    let nb_on_l = b.link("nb_onramp_left", g.ramp_length / 2.0, 1, side);

    let s = &cfg.signals;
    let controllers = vec![
        two_phase_crossover(
            "west_crossover",
            ["eb_inbound", "wb_outbound"],
            s.cycle,
            s.crossover_green,
            s.crossover_clearance,
            s.yellow,
            s.offsets[0],
        ),
        two_phase_crossover(
            "east_crossover",
            ["eb_outbound", "wb_inbound"],
            s.cycle,
            s.crossover_green,
            s.crossover_clearance,
            s.yellow,
            s.offsets[1],
        ),
    ];
    // (direction, (controller, phase) inbound, outbound, on-ramps, off-ramps)
    for (d, inbound, outbound, on_r, on_l, off_left, off_right) in [
        (&eb, (0usize, 0usize), (1usize, 0usize), sb_on_r, nb_on_l, sb_off, nb_off),
        (&wb, (1, 1), (0, 1), nb_on_r, sb_on_l, nb_off, sb_off),
    ] {
        b.straight(d.approach, d.stop_in, n, 0, 0, Movement::Through);
        b.connect(d.approach, on_r, vec![(0, 0)], Movement::Right);
        b.straight(d.stop_in, d.between, n, 0, 0, Movement::Crossover);
        b.stop(d.stop_in, (0..n).collect(), inbound.0, inbound.1);
        // off-ramp left turns join on the added outside lane, which ends
        b.connect(off_left, d.between, vec![(1, n)], Movement::Left);
        b.straight(d.between, d.stop_out, n, 0, 0, Movement::Through);
        b.connect(d.between, on_l, vec![(n - 1, 0)], Movement::Left);
        b.straight(d.stop_out, d.departure, n, 0, 1, Movement::Crossover);
        b.stop(d.stop_out, (0..n).collect(), outbound.0, outbound.1);
        b.connect(off_right, d.departure, vec![(0, 0)], Movement::Right);
        if s.signalized_ramp_rights {
            // runs with the crossover phase that is not feeding this departure
            b.stop(off_right, vec![0], outbound.0, 1 - outbound.1);
        }
        b.straight(d.departure, d.exit, n, 1, 0, Movement::Through);
    }
    for d in [&eb, &wb] {
        b.zone_before_end(d.stop_in, Some(d.approach), cfg.confusion.zone_length);
        b.zone_before_end(d.stop_out, Some(d.between), cfg.confusion.zone_length);
    }

    interchange_demand(&mut b, cfg, &eb, &wb, [sb_off, nb_off], [sb_on_r, nb_on_r], [nb_on_l, sb_on_l]);
    b.finish(controllers)
}

fn interchange_demand(
    b: &mut NetBuilder,
    cfg: &ScenarioConfig,
    eb: &Direction,
    wb: &Direction,
    off: [LinkId; 2],
    on_right: [LinkId; 2],
    on_left: [LinkId; 2],
) {
    let (through, right, left) = shares(cfg);
    let d = &cfg.demand;
    for (name, dir, on_r, on_l) in [("eb", eb, on_right[0], on_left[0]), ("wb", wb, on_right[1], on_left[1])] {
        let o = b.origin(name, dir.approach, d.major_vph);
        let main = [dir.approach, dir.stop_in, dir.between, dir.stop_out, dir.departure, dir.exit];
        b.route(o, &[name, "_through"].concat(), &main, through, Movement::Through);
        b.route(o, &[name, "_right"].concat(), &[dir.approach, on_r], right, Movement::Right);
        // DDI left turns leave between the crossovers, CDI ones from the bay
        let left_links: Vec<LinkId> = if b.kind == NetworkKind::Ddi {
            vec![dir.approach, dir.stop_in, dir.between, on_l]
        } else {
            vec![dir.approach, dir.stop_in, dir.between, dir.stop_out, on_l]
        };
        b.route(o, &[name, "_left"].concat(), &left_links, left, Movement::Left);
    }
    // southbound off-ramp: left joins eastbound between the terminals, right joins westbound departure
    for (name, ramp, left_dir, right_dir) in [("sb_off", off[0], eb, wb), ("nb_off", off[1], wb, eb)] {
        let o = b.origin(name, ramp, d.minor_vph);
        b.route(
            o,
            &[name, "_left"].concat(),
            &[ramp, left_dir.between, left_dir.stop_out, left_dir.departure, left_dir.exit],
            d.minor_left_share,
            Movement::Left,
        );
        b.route(
            o,
            &[name, "_right"].concat(),
            &[ramp, right_dir.departure, right_dir.exit],
            1.0 - d.minor_left_share,
            Movement::Right,
        );
    }
    let n = cfg.network.lanes;
    for (name, dir) in [("eb", eb), ("wb", wb)] {
        let up = (b.links[dir.approach.0].length / 2.0).min(200.0);
        b.detector(&[name, "_upstream"].concat(), dir.approach, up, n);
        let down = b.links[dir.exit.0].length / 2.0;
        b.detector(&[name, "_downstream"].concat(), dir.exit, down, n);
    }
}

/// Restricted crossing U-turn, westbound mainline only.
///
/// ```text
///  wb_upstream -> wb_merge -> wb_weave -> wb_diverge -> wb_downstream
///                   ^ minor_street            \ uturn (pocket lane)
/// ```
pub fn build_rcut(cfg: &ScenarioConfig) -> Result<RoadNetwork> {
    check(cfg, NetworkKind::Rcut)?;
    let g = &cfg.network;
    let n = g.lanes;
    let side = DriveSide::Right;
    let mut b = NetBuilder::new(NetworkKind::Rcut, cfg);

    let offset = feet_to_m(g.uturn_offset_ft);
    let mainline = miles_to_m(g.mainline_length_mi);
    let weave_len = offset - g.merge_length;
    let down_len = mainline - g.upstream_length - offset - g.pocket_length;

    let up = b.link("wb_upstream", g.upstream_length, n, side);
    let merge = b.link("wb_merge", g.merge_length, n + 1, side);
    let weave = b.link("wb_weave", weave_len, n, side);
    let diverge = b.link("wb_diverge", g.pocket_length, n + 1, side);
    let down = b.link("wb_downstream", down_len, n, side);
    let uturn = b.link("uturn", 100.0, 1, side);
    let minor = b.link("minor_street", g.minor_length, 1, side);

    b.straight(up, merge, n, 0, 1, Movement::Through);
    // lane 0 of the merge section is the minor street's acceleration lane
    b.connect(minor, merge, vec![(0, 0)], Movement::Right);
    b.straight(merge, weave, n, 1, 0, Movement::Through);
    b.straight(weave, diverge, n, 0, 0, Movement::Through);
    b.straight(diverge, down, n, 0, 0, Movement::Through);
    b.connect(diverge, uturn, vec![(n, 0)], Movement::UTurn);

    let d = &cfg.demand;
    let main_o = b.origin("mainline", up, d.major_vph);
    b.route(main_o, "mainline_through", &[up, merge, weave, diverge, down], 1.0 - d.major_left_share, Movement::Through);
    b.route(main_o, "mainline_uturn", &[up, merge, weave, diverge, uturn], d.major_left_share, Movement::UTurn);
    let minor_o = b.origin("minor", minor, d.minor_vph);
    b.route(minor_o, "minor_right", &[minor, merge, weave, diverge, down], 1.0 - d.minor_left_share, Movement::Through);
    b.route(minor_o, "minor_uturn", &[minor, merge, weave, diverge, uturn], d.minor_left_share, Movement::UTurn);

    let c = &cfg.confusion;
    b.decision_points.push(DecisionPoint {
        link: up,
        position: g.upstream_length - c.normal_decision_distance,
        movement: Movement::UTurn,
        variant: DecisionVariant::Normal,
    });
    b.decision_points.push(DecisionPoint {
        link: weave,
        position: weave_len - c.late_decision_distance,
        movement: Movement::UTurn,
        variant: DecisionVariant::Late,
    });
    b.zone_before_end(weave, Some(merge), c.zone_length);

    b.detector("upstream", up, g.upstream_length / 2.0, n);
    b.detector("diverging", weave, weave_len - 5.0, n);
    b.detector("downstream", down, (down_len / 2.0).min(300.0), n);

    b.finish(Vec::new())
}
