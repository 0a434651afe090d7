//! Scenario configuration. Mirrors the sections of the scenario file
//! (`network`, `demand`, `signals`, `fleet`, `confusion`, `run`); values in
//! customary units are converted to SI once, when the network is built.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dynamics::{DriverParams, LaneChangeRules};
use crate::error::{ConfigViolation, Error, Result};
use crate::netmodel::NetworkKind;
use crate::units::{kmh_to_mps, mph_to_mps};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ScenarioConfig {
    pub network: NetworkConfig,
    pub demand: DemandConfig,
    pub signals: SignalConfig,
    pub fleet: FleetConfig,
    pub confusion: ConfusionConfig,
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct NetworkConfig {
    pub kind: NetworkKind,
    /// Through lanes per arterial direction / on the mainline.
    pub lanes: u8,
    pub speed_limit_mph: f64,
    /// Arterial approach to the first signal, m.
    pub approach_length: f64,
    pub ramp_length: f64,
    /// Stop-line to stop-line distance between the two terminals, m.
    pub terminal_spacing: f64,
    /// Segment ending at each interior stop line (holds the left-turn bay), m.
    pub storage_length: f64,
    /// Arterial beyond the second terminal, m.
    pub departure_length: f64,
    pub mainline_length_mi: f64,
    /// Mainline from its entry to the minor-street junction, m.
    pub upstream_length: f64,
    /// Minor street to the U-turn pocket diverge, ft.
    pub uturn_offset_ft: f64,
    pub merge_length: f64,
    pub pocket_length: f64,
    pub minor_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct DemandConfig {
    /// Per arterial direction (interchanges) or mainline (RCUT), veh/h.
    pub major_vph: f64,
    /// Per off-ramp (interchanges) or minor street (RCUT), veh/h.
    pub minor_vph: f64,
    /// Arterial share turning right onto an on-ramp.
    pub major_right_share: f64,
    /// Arterial share turning left onto an on-ramp; mainline U-turn share on the RCUT.
    pub major_left_share: f64,
    /// Off-ramp share turning left; minor-street share using the U-turn on the RCUT.
    pub minor_left_share: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SignalConfig {
    pub cycle: f64,
    /// West and east controller offsets, s.
    pub offsets: [f64; 2],
    pub crossover_green: f64,
    pub crossover_clearance: f64,
    /// Through, left-to-ramp and left-from-ramp greens of a diamond terminal.
    pub terminal_greens: [f64; 3],
    pub terminal_clearance: f64,
    /// Yellow part of every clearance; the rest is all-red.
    pub yellow: f64,
    /// Put off-ramp right turns under signal control instead of a yield merge.
    pub signalized_ramp_rights: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ParamsConfig {
    pub max_accel: f64,
    pub comfortable_decel: f64,
    pub coolness: f64,
    pub delta: f64,
    pub time_gap: f64,
    pub min_gap: f64,
    /// Open-road desired speed; absent means "drive at the link limit".
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub desired_speed_kmh: Option<f64>,
    pub startup_lost_time: f64,
    pub uses_cah: bool,
}

impl ParamsConfig {
    pub fn cav() -> Self {
        Self::from_params(&DriverParams::cav(), Some(105.0))
    }

    pub fn hv() -> Self {
        Self::from_params(&DriverParams::hv(1.0), None)
    }

    fn from_params(p: &DriverParams, kmh: Option<f64>) -> Self {
        ParamsConfig {
            max_accel: p.a_max,
            comfortable_decel: p.b_comf,
            coolness: p.coolness,
            delta: p.delta,
            time_gap: p.time_gap,
            min_gap: p.min_gap,
            desired_speed_kmh: kmh,
            startup_lost_time: p.startup_lost_time,
            uses_cah: p.uses_cah,
        }
    }

    /// SI parameters; `fallback_speed` fills an absent desired speed.
    pub fn to_params(&self, fallback_speed: f64) -> DriverParams {
        DriverParams {
            a_max: self.max_accel,
            b_comf: self.comfortable_decel,
            coolness: self.coolness,
            delta: self.delta,
            time_gap: self.time_gap,
            min_gap: self.min_gap,
            desired_speed: self.desired_speed_kmh.map(kmh_to_mps).unwrap_or(fallback_speed),
            startup_lost_time: self.startup_lost_time,
            uses_cah: self.uses_cah,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct FleetConfig {
    /// Market penetration rate of automated vehicles, fraction.
    pub mpr: f64,
    pub vehicle_length: f64,
    pub cav: ParamsConfig,
    pub hv: ParamsConfig,
    pub lane_change: LaneChangeRules,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ConfusionConfig {
    /// Share of human drivers unfamiliar with the design.
    pub share: f64,
    pub slowdown_factor: f64,
    pub zone_length: f64,
    /// RCUT: normal U-turn decision point, metres upstream of the minor street.
    pub normal_decision_distance: f64,
    /// RCUT: late decision point, metres upstream of the pocket diverge.
    pub late_decision_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct RunConfig {
    pub duration: f64,
    pub warmup: f64,
    pub step: f64,
    pub seed: u64,
    pub replications: u32,
    pub detector_window: f64,
    pub trajectories: bool,
    pub trajectory_interval: f64,
}

impl ScenarioConfig {
    /// Default experiment for one network kind at 0 % MPR and no confusion.
    pub fn baseline(kind: NetworkKind) -> Self {
        let rcut = kind == NetworkKind::Rcut;
        ScenarioConfig {
            network: NetworkConfig {
                kind,
                lanes: 3,
                speed_limit_mph: 50.0,
                approach_length: 500.0,
                ramp_length: 300.0,
                terminal_spacing: 200.0,
                storage_length: 100.0,
                departure_length: 300.0,
                mainline_length_mi: 1.61,
                upstream_length: 1000.0,
                uturn_offset_ft: 1300.0,
                merge_length: 150.0,
                pocket_length: 150.0,
                minor_length: 300.0,
            },
            demand: if rcut {
                DemandConfig {
                    major_vph: 5000.0,
                    minor_vph: 400.0,
                    major_right_share: 0.0,
                    major_left_share: 0.05,
                    minor_left_share: 0.6,
                }
            } else {
                DemandConfig {
                    major_vph: 3000.0,
                    minor_vph: 400.0,
                    major_right_share: 0.35,
                    major_left_share: 0.30,
                    minor_left_share: 0.5,
                }
            },
            signals: SignalConfig {
                cycle: 120.0,
                offsets: [0.0, 0.0],
                crossover_green: 55.0,
                crossover_clearance: 5.0,
                terminal_greens: [73.0, 17.0, 18.0],
                terminal_clearance: 4.0,
                yellow: 3.0,
                signalized_ramp_rights: false,
            },
            fleet: FleetConfig {
                mpr: 0.0,
                vehicle_length: 4.5,
                cav: ParamsConfig::cav(),
                hv: ParamsConfig::hv(),
                lane_change: LaneChangeRules::default(),
            },
            confusion: ConfusionConfig {
                share: 0.0,
                slowdown_factor: 0.5,
                zone_length: 100.0,
                normal_decision_distance: 500.0,
                late_decision_distance: 60.0,
            },
            run: RunConfig {
                duration: 3900.0,
                warmup: 300.0,
                step: 0.1,
                seed: 42,
                replications: if rcut { 30 } else { 10 },
                detector_window: 300.0,
                trajectories: false,
                trajectory_interval: 1.0,
            },
        }
    }

    pub fn speed_limit(&self) -> f64 {
        mph_to_mps(self.network.speed_limit_mph)
    }

    pub fn cav_params(&self) -> DriverParams {
        self.fleet.cav.to_params(self.speed_limit())
    }

    pub fn hv_params(&self) -> DriverParams {
        self.fleet.hv.to_params(self.speed_limit())
    }

    /// Every violated constraint, in a stable order.
    pub fn violations(&self) -> Vec<ConfigViolation> {
        let mut out = Vec::new();
        let mut bad = |path: &str, message: String| {
            out.push(ConfigViolation {
                path: path.into(),
                message,
            })
        };
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let fraction = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);

        let n = &self.network;
        if n.lanes == 0 {
            bad("network.lanes", "must be >= 1".into());
        }
        if n.lanes > 6 {
            bad("network.lanes", format!("{} exceeds the supported maximum of 6", n.lanes));
        }
        if !positive(n.speed_limit_mph) {
            bad("network.speed_limit_mph", format!("{} must be > 0", n.speed_limit_mph));
        }
        for (path, v) in [
            ("network.approach_length", n.approach_length),
            ("network.ramp_length", n.ramp_length),
            ("network.terminal_spacing", n.terminal_spacing),
            ("network.storage_length", n.storage_length),
            ("network.departure_length", n.departure_length),
            ("network.mainline_length_mi", n.mainline_length_mi),
            ("network.upstream_length", n.upstream_length),
            ("network.uturn_offset_ft", n.uturn_offset_ft),
            ("network.merge_length", n.merge_length),
            ("network.pocket_length", n.pocket_length),
            ("network.minor_length", n.minor_length),
        ] {
            if !positive(v) {
                bad(path, format!("{v} must be > 0"));
            }
        }
        match n.kind {
            NetworkKind::Cdi | NetworkKind::Ddi => {
                if n.approach_length <= n.storage_length {
                    bad("network.approach_length", "must exceed network.storage_length".into());
                }
                if n.terminal_spacing <= n.storage_length {
                    bad("network.terminal_spacing", "must exceed network.storage_length".into());
                }
            }
            NetworkKind::Rcut => {
                let offset = crate::units::feet_to_m(n.uturn_offset_ft);
                if offset <= n.merge_length {
                    bad("network.uturn_offset_ft", "pocket diverge must lie beyond the merge lane".into());
                }
                let used = n.upstream_length + offset + n.pocket_length;
                if crate::units::miles_to_m(n.mainline_length_mi) <= used {
                    bad(
                        "network.mainline_length_mi",
                        format!("mainline must exceed {used:.1} m of upstream, weave and pocket"),
                    );
                }
            }
        }

        let d = &self.demand;
        for (path, v) in [("demand.major_vph", d.major_vph), ("demand.minor_vph", d.minor_vph)] {
            if !positive(v) {
                bad(path, format!("{v} must be > 0"));
            }
        }
        for (path, v) in [
            ("demand.major_right_share", d.major_right_share),
            ("demand.major_left_share", d.major_left_share),
            ("demand.minor_left_share", d.minor_left_share),
        ] {
            if !fraction(v) {
                bad(path, format!("{v} outside [0, 1]"));
            }
        }
        if d.major_right_share + d.major_left_share > 1.0 + 1e-9 {
            bad("demand.major_left_share", "turning shares sum above 1".into());
        }
        if n.kind == NetworkKind::Rcut && d.major_right_share != 0.0 {
            bad("demand.major_right_share", "the RCUT mainline has no right-turn exit; must be 0".into());
        }

        let s = &self.signals;
        if !positive(s.cycle) {
            bad("signals.cycle", format!("{} must be > 0", s.cycle));
        }
        if !s.offsets.iter().all(|o| o.is_finite()) {
            bad("signals.offsets", "must be finite".into());
        }
        if !positive(s.crossover_green) {
            bad("signals.crossover_green", "missing or nonpositive phase duration".into());
        }
        if !s.terminal_greens.iter().all(|&g| positive(g)) {
            bad("signals.terminal_greens", "missing or nonpositive phase duration".into());
        }
        if !(s.crossover_clearance >= 0.0 && s.terminal_clearance >= 0.0 && s.yellow >= 0.0) {
            bad("signals.yellow", "clearance intervals must be >= 0".into());
        }
        match n.kind {
            NetworkKind::Ddi if 2.0 * (s.crossover_green + s.crossover_clearance) > s.cycle + 1e-9 => {
                bad("signals.crossover_green", "two phases plus clearance exceed the cycle".into())
            }
            NetworkKind::Cdi
                if s.terminal_greens.iter().sum::<f64>() + 3.0 * s.terminal_clearance > s.cycle + 1e-9 =>
            {
                bad("signals.terminal_greens", "three phases plus clearance exceed the cycle".into())
            }
            _ => {}
        }

        let f = &self.fleet;
        if !fraction(f.mpr) {
            bad("fleet.mpr", format!("{} outside [0, 1]", f.mpr));
        }
        if !positive(f.vehicle_length) {
            bad("fleet.vehicle_length", format!("{} must be > 0", f.vehicle_length));
        }
        for (prefix, p) in [("fleet.cav", &f.cav), ("fleet.hv", &f.hv)] {
            if let Some(k) = p.desired_speed_kmh {
                if !positive(k) {
                    bad(&format!("{prefix}.desired_speed_kmh"), format!("{k} must be > 0"));
                }
            }
            for msg in p.to_params(1.0).violations() {
                bad(prefix, msg.into());
            }
        }
        let lc = &f.lane_change;
        if !(lc.safe_decel < 0.0 && lc.relaxed_decel <= lc.safe_decel) {
            bad("fleet.lane_change.relaxed_decel", "bounds must satisfy relaxed <= safe < 0".into());
        }
        if !(lc.advantage >= 0.0 && lc.cooldown >= 0.0) {
            bad("fleet.lane_change.advantage", "advantage and cooldown must be >= 0".into());
        }

        let c = &self.confusion;
        if !fraction(c.share) {
            bad("confusion.share", format!("{} outside [0, 1]", c.share));
        }
        if !(c.slowdown_factor > 0.0 && c.slowdown_factor <= 1.0) {
            bad("confusion.slowdown_factor", format!("{} outside (0, 1]", c.slowdown_factor));
        }
        if !(c.zone_length >= 0.0) {
            bad("confusion.zone_length", "must be >= 0".into());
        }
        if n.kind == NetworkKind::Rcut {
            if !(c.normal_decision_distance >= 0.0 && c.normal_decision_distance <= n.upstream_length) {
                bad("confusion.normal_decision_distance", "must lie within network.upstream_length".into());
            }
            let weave = crate::units::feet_to_m(n.uturn_offset_ft) - n.merge_length;
            if !(c.late_decision_distance > 0.0 && c.late_decision_distance < weave) {
                bad(
                    "confusion.late_decision_distance",
                    format!("must lie in (0, {weave:.1}) m, the weaving section"),
                );
            }
        }

        let r = &self.run;
        if !positive(r.step) {
            bad("run.step", format!("{} must be > 0", r.step));
        }
        if !(r.warmup >= 0.0 && r.warmup.is_finite()) {
            bad("run.warmup", format!("{} must be >= 0", r.warmup));
        }
        if !(r.duration > r.warmup && r.duration.is_finite()) {
            bad("run.duration", format!("{} must exceed run.warmup ({})", r.duration, r.warmup));
        }
        if r.replications == 0 {
            bad("run.replications", "must be >= 1".into());
        }
        if !positive(r.detector_window) {
            bad("run.detector_window", format!("{} must be > 0", r.detector_window));
        }
        if !positive(r.trajectory_interval) {
            bad("run.trajectory_interval", format!("{} must be > 0", r.trajectory_interval));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_defaults_valid() {
        for kind in [NetworkKind::Cdi, NetworkKind::Ddi, NetworkKind::Rcut] {
            let c = ScenarioConfig::baseline(kind);
            assert!(c.violations().is_empty(), "{kind:?}: {:?}", c.violations());
        }
    }

    #[test]
    fn every_violation_listed() {
        let mut c = ScenarioConfig::baseline(NetworkKind::Ddi);
        c.fleet.mpr = 1.5;
        c.run.duration = 100.0;
        c.network.speed_limit_mph = 0.0;
        let v = c.violations();
        let paths: Vec<&str> = v.iter().map(|x| x.path.as_str()).collect();
        assert!(paths.contains(&"fleet.mpr"));
        assert!(paths.contains(&"run.duration"));
        assert!(paths.contains(&"network.speed_limit_mph"));
        assert!(v.iter().any(|x| x.message.contains("1.5")));
    }

    #[test]
    fn hv_desired_speed_follows_limit() {
        let c = ScenarioConfig::baseline(NetworkKind::Ddi);
        assert!((c.hv_params().desired_speed - 22.352).abs() < 1e-12);
        assert!((c.cav_params().desired_speed - 29.1667).abs() < 1e-4);
    }
}
