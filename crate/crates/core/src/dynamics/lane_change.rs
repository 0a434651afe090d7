//! Gap-acceptance lane changing. Changes are instantaneous lane swaps; the
//! engine enforces a cooldown between consecutive changes of one vehicle.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaneChange {
    Keep,
    Left,
    Right,
}

impl From<Side> for LaneChange {
    fn from(s: Side) -> Self {
        match s {
            Side::Left => LaneChange::Left,
            Side::Right => LaneChange::Right,
        }
    }
}

/// Route-imposed need to leave the current lane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaneNeed {
    None,
    /// `relaxed` is set for confused drivers acting on a late decision.
    Mandatory { toward: Side, relaxed: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct LaneChangeRules {
    /// Lowest acceptable imposed acceleration for normal changes, m/s².
    pub safe_decel: f64,
    /// Same bound for confused drivers after a late decision.
    pub relaxed_decel: f64,
    /// Own acceleration gain needed for a discretionary change, m/s².
    pub advantage: f64,
    /// Minimum time between two changes of one vehicle, s.
    pub cooldown: f64,
}

impl Default for LaneChangeRules {
    fn default() -> Self {
        LaneChangeRules {
            safe_decel: -4.0,
            relaxed_decel: -6.0,
            advantage: 0.2,
            cooldown: 2.0,
        }
    }
}

/// The situation in one adjacent lane, evaluated as if the change had
/// already happened.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneCandidate {
    /// Own acceleration behind the new leader.
    pub own_accel: f64,
    /// New follower's acceleration behind us, `None` when nobody follows.
    pub follower_accel: Option<f64>,
    /// Physical clearances to the new leader and follower, m.
    pub gap_ahead: f64,
    pub gap_behind: f64,
    /// Whether a discretionary move into this lane keeps the route feasible.
    pub route_ok: bool,
}

impl LaneCandidate {
    /// Both gaps open and neither vehicle has to brake harder than `bound`.
    pub fn safe(&self, bound: f64) -> bool {
        self.gap_ahead > 0.0
            && self.gap_behind > 0.0
            && self.own_accel >= bound
            && self.follower_accel.is_none_or(|a| a >= bound)
    }
}

pub fn lane_change_decision(
    need: LaneNeed,
    current_accel: f64,
    left: Option<&LaneCandidate>,
    right: Option<&LaneCandidate>,
    rules: &LaneChangeRules,
) -> LaneChange {
    match need {
        LaneNeed::Mandatory { toward, relaxed } => {
            let bound = if relaxed {
                rules.relaxed_decel
            } else {
                rules.safe_decel
            };
            let cand = match toward {
                Side::Left => left,
                Side::Right => right,
            };
            match cand {
                Some(c) if c.safe(bound) => toward.into(),
                _ => LaneChange::Keep,
            }
        }
        LaneNeed::None => {
            let gain = |c: Option<&LaneCandidate>| {
                c.filter(|c| c.route_ok && c.safe(rules.safe_decel))
                    .map(|c| c.own_accel - current_accel)
                    .filter(|g| *g >= rules.advantage)
            };
            match (gain(left), gain(right)) {
                (Some(l), Some(r)) if r > l => LaneChange::Right,
                (Some(_), _) => LaneChange::Left,
                (None, Some(_)) => LaneChange::Right,
                (None, None) => LaneChange::Keep,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{idm_accel, DriverParams, LeaderContext};

    fn open() -> LaneCandidate {
        LaneCandidate {
            own_accel: 1.0,
            follower_accel: None,
            gap_ahead: f64::INFINITY,
            gap_behind: f64::INFINITY,
            route_ok: true,
        }
    }

    #[test]
    fn empty_lane_accepts_mandatory() {
        let need = LaneNeed::Mandatory {
            toward: Side::Left,
            relaxed: false,
        };
        let r = LaneChangeRules::default();
        assert_eq!(lane_change_decision(need, 0.0, Some(&open()), None, &r), LaneChange::Left);
        // no lane on that side
        assert_eq!(lane_change_decision(need, 0.0, None, Some(&open()), &r), LaneChange::Keep);
    }

    #[test]
    fn hard_braking_follower_rejected_even_when_relaxed() {
        let r = LaneChangeRules::default();
        let mut c = open();
        c.follower_accel = Some(-7.0);
        c.gap_behind = 5.0;
        for relaxed in [false, true] {
            let need = LaneNeed::Mandatory {
                toward: Side::Right,
                relaxed,
            };
            assert_eq!(lane_change_decision(need, 0.0, None, Some(&c), &r), LaneChange::Keep);
        }
    }

    #[test]
    fn moderate_gap_only_under_relaxed_bound() {
        // Follower doing 15 m/s behind a stopped merging car: find the gap
        // at which its IDM response lands between -6 and -4.
        let hv = DriverParams::hv(22.352);
        let gap = (10..200)
            .map(|g| g as f64 * 0.5)
            .find(|&g| {
                let a = idm_accel(&hv, 15.0, Some(&LeaderContext::standing(g)));
                a > -5.5 && a < -4.5
            })
            .expect("gap with ~-5 m/s² response");
        let follower = idm_accel(&hv, 15.0, Some(&LeaderContext::standing(gap)));
        let c = LaneCandidate {
            own_accel: 0.5,
            follower_accel: Some(follower),
            gap_ahead: 40.0,
            gap_behind: gap,
            route_ok: true,
        };
        let r = LaneChangeRules::default();
        let late = LaneNeed::Mandatory {
            toward: Side::Left,
            relaxed: true,
        };
        let normal = LaneNeed::Mandatory {
            toward: Side::Left,
            relaxed: false,
        };
        assert_eq!(lane_change_decision(late, 0.0, Some(&c), None, &r), LaneChange::Left);
        assert_eq!(lane_change_decision(normal, 0.0, Some(&c), None, &r), LaneChange::Keep);
    }

    #[test]
    fn discretionary_needs_advantage_and_route() {
        let r = LaneChangeRules::default();
        let mut c = open();
        c.own_accel = 0.15;
        assert_eq!(lane_change_decision(LaneNeed::None, 0.0, Some(&c), None, &r), LaneChange::Keep);
        c.own_accel = 0.25;
        assert_eq!(lane_change_decision(LaneNeed::None, 0.0, Some(&c), None, &r), LaneChange::Left);
        c.route_ok = false;
        assert_eq!(lane_change_decision(LaneNeed::None, 0.0, Some(&c), None, &r), LaneChange::Keep);
        let mut better = open();
        better.own_accel = 0.9;
        let mut worse = open();
        worse.own_accel = 0.5;
        assert_eq!(
            lane_change_decision(LaneNeed::None, 0.0, Some(&worse), Some(&better), &r),
            LaneChange::Right
        );
    }

    #[test]
    fn overlap_never_accepted() {
        let r = LaneChangeRules::default();
        let mut c = open();
        c.gap_ahead = -0.1;
        let need = LaneNeed::Mandatory {
            toward: Side::Left,
            relaxed: true,
        };
        assert_eq!(lane_change_decision(need, 0.0, Some(&c), None, &r), LaneChange::Keep);
    }
}
