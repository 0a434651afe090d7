use super::params::DriverParams;
use crate::control::Indication;

/// Floor applied to every commanded acceleration, m/s².
pub const EMERGENCY_DECEL: f64 = -9.0;

/// What a follower sees of the obstacle ahead: a real vehicle or a standing
/// virtual leader (stop line, lane end).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaderContext {
    /// Bumper-to-bumper distance, m.
    pub gap: f64,
    pub leader_speed: f64,
    pub leader_accel: f64,
}

impl LeaderContext {
    pub fn new(gap: f64, leader_speed: f64, leader_accel: f64) -> Self {
        LeaderContext {
            gap,
            leader_speed,
            leader_accel,
        }
    }

    /// A stopped obstacle `gap` metres ahead.
    pub fn standing(gap: f64) -> Self {
        LeaderContext::new(gap, 0.0, 0.0)
    }
}

#[inline]
fn pow_delta(x: f64, delta: f64) -> f64 {
    if delta == 4.0 {
        let x2 = x * x;
        x2 * x2
    } else {
        libm::pow(x, delta)
    }
}

#[inline]
pub fn clamp_command(accel: f64, a_max: f64) -> f64 {
    accel.max(EMERGENCY_DECEL).min(a_max)
}

/// Desired dynamic gap `s*`. Never below the standstill distance.
pub fn desired_gap(p: &DriverParams, v: f64, v_lead: f64) -> f64 {
    let s = p.min_gap + v * p.time_gap + v * (v - v_lead) / (2.0 * libm::sqrt(p.a_max * p.b_comf));
    s.max(p.min_gap)
}

fn idm_raw(p: &DriverParams, v_des: f64, v: f64, leader: Option<&LeaderContext>) -> f64 {
    let free = 1.0 - pow_delta(v / v_des, p.delta);
    let interaction = match leader {
        Some(l) => {
            let r = desired_gap(p, v, l.leader_speed) / l.gap;
            r * r
        }
        None => 0.0,
    };
    p.a_max * (free - interaction)
}

/// Intelligent Driver Model acceleration. The interaction term uses the
/// actual gap in the denominator; it vanishes without a leader.
///
/// The caller must not pass a leader at zero gap; the engine reports that
/// situation as a collision instead of asking for an acceleration.
pub fn idm_accel(p: &DriverParams, v: f64, leader: Option<&LeaderContext>) -> f64 {
    clamp_command(idm_raw(p, p.desired_speed, v, leader), p.a_max)
}

/// Constant-acceleration heuristic. The leader's acceleration is capped at
/// the follower's own maximum.
pub fn cah_accel(p: &DriverParams, v: f64, leader: &LeaderContext) -> f64 {
    let a_lead = leader.leader_accel.min(p.a_max);
    let s = leader.gap;
    let vl = leader.leader_speed;
    if vl * (v - vl) <= -2.0 * s * a_lead {
        let denom = vl * vl - 2.0 * s * a_lead;
        if libm::fabs(denom) >= 1e-9 {
            return v * v * a_lead / denom;
        }
    }
    let dv = v - vl;
    let heaviside = if dv > 0.0 { 1.0 } else { 0.0 };
    a_lead - dv * dv * heaviside / (2.0 * s)
}

fn eidm_raw(p: &DriverParams, v_des: f64, v: f64, leader: Option<&LeaderContext>) -> f64 {
    let a_idm = idm_raw(p, v_des, v, leader);
    let Some(l) = leader else {
        return a_idm;
    };
    let a_cah = cah_accel(p, v, l);
    if a_idm >= a_cah {
        a_idm
    } else {
        let c = p.coolness;
        (1.0 - c) * a_idm + c * (a_cah + p.b_comf * libm::tanh((a_idm - a_cah) / p.b_comf))
    }
}

/// Enhanced IDM: plain IDM unless the heuristic says the situation is less
/// critical, in which case the two are blended through the coolness factor.
pub fn eidm_accel(p: &DriverParams, v: f64, leader: Option<&LeaderContext>) -> f64 {
    clamp_command(eidm_raw(p, p.desired_speed, v, leader), p.a_max)
}

/// Class-appropriate car-following law with an explicit desired speed
/// (link cap and confusion slowdown already applied).
#[inline]
pub fn longitudinal_accel(p: &DriverParams, v_des: f64, v: f64, leader: Option<&LeaderContext>) -> f64 {
    let raw = if p.uses_cah {
        eidm_raw(p, v_des, v, leader)
    } else {
        idm_raw(p, v_des, v, leader)
    };
    clamp_command(raw, p.a_max)
}

/// Human-driver acceleration: IDM, held at zero while the start-up lost time
/// of a released queue leader is running.
pub fn hv_accel(p: &DriverParams, v: f64, leader: Option<&LeaderContext>, startup_timer: f64) -> f64 {
    let a = idm_accel(p, v, leader);
    if startup_timer > 0.0 {
        a.min(0.0)
    } else {
        a
    }
}

/// Whether a vehicle must treat the stop line as a standing obstacle.
/// Yellow: stop only if it can be done at comfortable deceleration.
/// Red: stop unless even the emergency floor cannot hold the line.
pub fn must_stop_for_signal(p: &DriverParams, v: f64, dist_to_stopline: f64, indication: Indication) -> bool {
    if dist_to_stopline <= 0.0 {
        return false;
    }
    match indication {
        Indication::Green => false,
        Indication::Yellow => v * v <= 2.0 * p.b_comf * dist_to_stopline,
        Indication::Red => v * v <= 2.0 * -EMERGENCY_DECEL * dist_to_stopline,
    }
}

/// Response of the nearest vehicle to an upcoming stop line. A line that
/// must be honoured acts as a stopped leader; otherwise the vehicle drives
/// as on an open road.
pub fn signal_approach_accel(p: &DriverParams, v: f64, dist_to_stopline: f64, indication: Indication) -> f64 {
    if must_stop_for_signal(p, v, dist_to_stopline, indication) {
        longitudinal_accel(p, p.desired_speed, v, Some(&LeaderContext::standing(dist_to_stopline)))
    } else {
        longitudinal_accel(p, p.desired_speed, v, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::vec::Vec;

    // Straight-line transcriptions of the model equations, kept free of the
    // helpers above.
    fn oracle_gap(a: f64, b: f64, s0: f64, t: f64, v: f64, vl: f64) -> f64 {
        let raw = s0 + v * t + v * (v - vl) / (2.0 * (a * b).sqrt());
        if raw < s0 {
            s0
        } else {
            raw
        }
    }
    fn oracle_idm(a: f64, b: f64, s0: f64, t: f64, d: f64, vdes: f64, v: f64, vl: f64, s: f64) -> f64 {
        a * (1.0 - (v / vdes).powf(d) - (oracle_gap(a, b, s0, t, v, vl) / s).powi(2))
    }
    fn oracle_cah(amax: f64, v: f64, vl: f64, al: f64, s: f64) -> f64 {
        let at = if al < amax { al } else { amax };
        if vl * (v - vl) <= -2.0 * s * at && (vl * vl - 2.0 * s * at).abs() >= 1e-9 {
            v * v * at / (vl * vl - 2.0 * s * at)
        } else {
            at - (v - vl).powi(2) * if v - vl > 0.0 { 1.0 } else { 0.0 } / (2.0 * s)
        }
    }
    fn rel(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    }

    #[test]
    fn desired_gap_examples() {
        let p = DriverParams::cav();
        assert!(rel(desired_gap(&p, 20.0, 20.0), 19.0) < 1e-12);
        assert_eq!(desired_gap(&p, 0.0, 0.0), 1.0);
        // raw 1 + 18 - 25 = -6, clamped
        assert_eq!(desired_gap(&p, 20.0, 25.0), 1.0);
        assert!(rel(desired_gap(&p, 20.0, 20.0), oracle_gap(2.0, 2.0, 1.0, 0.9, 20.0, 20.0)) < 1e-12);
    }

    #[test]
    fn idm_examples() {
        let p = DriverParams::cav();
        assert!(idm_accel(&p, p.desired_speed, None).abs() < 1e-15);
        assert_eq!(idm_accel(&p, 0.0, None), 2.0);
        let a = idm_accel(&p, 20.0, Some(&LeaderContext::new(19.0, 20.0, 0.0)));
        let o = oracle_idm(2.0, 2.0, 1.0, 0.9, 4.0, 105.0 / 3.6, 20.0, 20.0, 19.0);
        assert!(rel(a, o) < 1e-12, "{a} vs {o}");
        assert!((a + 0.442).abs() < 1e-3);
    }

    #[test]
    fn cah_examples() {
        let p = DriverParams::cav();
        assert_eq!(cah_accel(&p, 20.0, &LeaderContext::new(19.0, 20.0, 0.0)), 0.0);
        assert_eq!(cah_accel(&p, 20.0, &LeaderContext::new(19.0, 25.0, 0.0)), 0.0);
        let a = cah_accel(&p, 25.0, &LeaderContext::new(10.0, 20.0, 0.0));
        assert!(rel(a, -1.25) < 1e-12);
        assert!(rel(a, oracle_cah(2.0, 25.0, 20.0, 0.0, 10.0)) < 1e-12);
        // leader acceleration above a_max is capped
        let capped = cah_accel(&p, 10.0, &LeaderContext::new(30.0, 12.0, 5.0));
        assert!(rel(capped, oracle_cah(2.0, 10.0, 12.0, 5.0, 30.0)) < 1e-12);
    }

    #[test]
    fn cah_branch_one_guard() {
        let p = DriverParams::cav();
        // v_lead = 0, leader braking: branch-1 test holds but denominator
        // is nonzero; v_lead = 0 with zero accel makes it vanish.
        let braking = cah_accel(&p, 10.0, &LeaderContext::new(20.0, 0.0, -1.0));
        assert!(rel(braking, 100.0 * -1.0 / 40.0) < 1e-12);
        let degenerate = cah_accel(&p, 10.0, &LeaderContext::new(20.0, 0.0, 0.0));
        assert!(degenerate.is_finite());
        assert!(rel(degenerate, -100.0 / 40.0) < 1e-12);
    }

    #[test]
    fn eidm_blend_example() {
        let p = DriverParams::cav();
        // Hand-built blend for IDM=-8, CAH=-1.
        let c = 0.99;
        let b = 2.0;
        let blended: f64 = (1.0 - c) * -8.0 + c * (-1.0 + b * (-7.0f64 / b).tanh());
        assert!((blended + 3.05).abs() < 5e-3);
        // Construct a state producing a_idm < a_cah and compare.
        let l = LeaderContext::new(5.0, 15.0, 0.0);
        let v = 18.0;
        let a_idm = oracle_idm(2.0, 2.0, 1.0, 0.9, 4.0, 105.0 / 3.6, v, 15.0, 5.0);
        let a_cah = oracle_cah(2.0, v, 15.0, 0.0, 5.0);
        assert!(a_idm < a_cah);
        let expected = (1.0 - c) * a_idm + c * (a_cah + b * ((a_idm - a_cah) / b).tanh());
        let got = eidm_accel(&p, v, Some(&l));
        assert!(rel(got, expected.max(EMERGENCY_DECEL)) < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn coolness_off_reduces_to_idm() {
        let mut p = DriverParams::cav();
        p.coolness = 0.0;
        let l = LeaderContext::new(5.0, 15.0, 0.0);
        assert_eq!(eidm_accel(&p, 18.0, Some(&l)), idm_accel(&p, 18.0, Some(&l)));
    }

    #[test]
    fn startup_hold() {
        let p = DriverParams::hv(22.352);
        assert_eq!(hv_accel(&p, 0.0, None, 1.5), 0.0);
        assert!(hv_accel(&p, 0.0, None, 0.0) > 0.0);
    }

    #[test]
    fn signal_examples() {
        let p = DriverParams::cav();
        assert!(signal_approach_accel(&p, 0.0, 1.0, Indication::Red).abs() < 1e-12);
        assert_eq!(
            signal_approach_accel(&p, 15.0, 50.0, Indication::Green),
            eidm_accel(&p, 15.0, None)
        );
        assert_eq!(
            signal_approach_accel(&p, 15.0, 50.0, Indication::Red),
            eidm_accel(&p, 15.0, Some(&LeaderContext::standing(50.0)))
        );
        // yellow far away with a comfortable stop: stops
        assert!(must_stop_for_signal(&p, 15.0, 60.0, Indication::Yellow));
        // yellow too close: proceeds
        assert!(!must_stop_for_signal(&p, 15.0, 20.0, Indication::Yellow));
    }

    #[test]
    fn equilibrium_platoon_is_stationary() {
        for p in [DriverParams::cav(), DriverParams::hv(22.352)] {
            let mut worst: f64 = 0.0;
            let speeds: Vec<f64> = (1..=40).map(|i| i as f64 * 0.5).collect();
            for v in speeds {
                // equilibrium gap including the free-road term
                let s_star = desired_gap(&p, v, v);
                let free = 1.0 - (v / p.desired_speed).powi(4);
                if free <= 0.0 {
                    continue;
                }
                let s_eq = s_star / free.sqrt();
                let a = longitudinal_accel(&p, p.desired_speed, v, Some(&LeaderContext::new(s_eq, v, 0.0)));
                worst = worst.max(a.abs());
            }
            assert!(worst < 1e-9, "residual {worst}");
        }
    }
}
